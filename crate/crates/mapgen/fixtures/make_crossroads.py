"""Writes crossroads.osm and its independently rasterized oracle.

The oracle does not share code with the Rust rasterizer. All geometry is
axis-aligned, so a road is a straight run of cells widened by width // 2 in
each direction, and a rectangle covers exactly the cells whose centres fall
inside it (half-open on the far edges).

Usage: python3 make_crossroads.py  (writes next to this script)
"""

import math
import os

R = 6371000.0
SIZE_M = 63.5  # -> 64 x 64 cells at 1 m/cell
MIN_LAT, MIN_LON = 48.0, 11.0

max_lat = MIN_LAT + math.degrees(SIZE_M / R)
lat0 = 0.5 * (MIN_LAT + max_lat)
cos0 = math.cos(math.radians(lat0))
max_lon = MIN_LON + math.degrees(SIZE_M / (R * cos0))
# Round-trip through repr so both sides parse the very same doubles.
max_lat, max_lon = float(repr(max_lat)), float(repr(max_lon))
lat0 = 0.5 * (MIN_LAT + max_lat)
lon0 = 0.5 * (MIN_LON + max_lon)
cos0 = math.cos(math.radians(lat0))
half_w = math.radians(max_lon - MIN_LON) * cos0 * R / 2
half_h = math.radians(max_lat - MIN_LAT) * R / 2
ROWS = math.ceil(2 * half_h)
COLS = math.ceil(2 * half_w)


def latlon(row, col):
    """Inverse of the equirectangular projection for fractional cells."""
    lat = lat0 + math.degrees((half_h - row) / R)
    lon = lon0 + math.degrees((col - half_w) / (R * cos0))
    return lat, lon


# (tags, [(row, col), ...])
ROADS = [
    ({"highway": "residential"}, [(31.5, -6.5), (31.5, 70.5)], 5),
    ({"highway": "footway"}, [(2.5, 20.5), (60.5, 20.5)], 3),
    ({"highway": "footway"}, [(10.5, 40.5), (10.5, 55.5), (50.5, 55.5)], 3),
    ({"highway": "service"}, [(45.5, 20.5), (45.5, 55.5)], 3),
]
RECTS = [  # (tags, r0, c0, r1, c1)
    ({"building": "yes"}, 27.25, 44.25, 36.75, 50.75),
    ({"building": "house"}, 5.25, 5.25, 8.75, 12.75),
    ({"natural": "water"}, 55.25, 0.25, 63.75, 10.75),
]
BARRIERS = [({"barrier": "fence"}, [(40.5, 30.5), (50.5, 30.5)])]
IGNORED = [
    ({}, [(20.5, 5.5), (20.5, 15.5)]),
    ({"highway": "motorway"}, [(15.5, 5.5), (15.5, 60.5)]),
]


def oracle():
    grid = [[True] * COLS for _ in range(ROWS)]  # True = obstacle

    def put(r, c, obstacle):
        if 0 <= r < ROWS and 0 <= c < COLS:
            grid[r][c] = obstacle

    def run(a, b):
        (r0, c0), (r1, c1) = [(math.floor(r), math.floor(c)) for r, c in (a, b)]
        if r0 == r1:
            return [(r0, c) for c in range(min(c0, c1), max(c0, c1) + 1)]
        assert c0 == c1, "oracle only handles axis-aligned segments"
        return [(r, c0) for r in range(min(r0, r1), max(r0, r1) + 1)]

    for _, pts, width in ROADS:
        k = width // 2
        for a, b in zip(pts, pts[1:]):
            for r, c in run(a, b):
                for dr in range(-k, k + 1):
                    for dc in range(-k, k + 1):
                        put(r + dr, c + dc, False)
    for _, r0, c0, r1, c1 in RECTS:
        for r in range(ROWS):
            for c in range(COLS):
                if r0 <= r + 0.5 < r1 and c0 <= c + 0.5 < c1:
                    grid[r][c] = True
    for _, pts in BARRIERS:
        for a, b in zip(pts, pts[1:]):
            for r, c in run(a, b):
                put(r, c, True)
    return grid


def osm():
    nodes, ways = [], []

    def node(row, col):
        lat, lon = latlon(row, col)
        nodes.append(f'  <node id="{len(nodes) + 1}" lat="{lat!r}" lon="{lon!r}"/>')
        return len(nodes)

    def way(tags, ids):
        body = "".join(f'<nd ref="{i}"/>' for i in ids)
        body += "".join(f'<tag k="{k}" v="{v}"/>' for k, v in tags.items())
        ways.append(f'  <way id="{100 + len(ways)}">{body}</way>')

    for tags, pts, _ in ROADS:
        way(tags, [node(r, c) for r, c in pts])
    for tags, r0, c0, r1, c1 in RECTS:
        ids = [node(r0, c0), node(r0, c1), node(r1, c1), node(r1, c0)]
        way(tags, ids + ids[:1])
    for tags, pts in BARRIERS + IGNORED:
        way(tags, [node(r, c) for r, c in pts])
    node(3.5, 3.5)  # unreferenced
    bounds = f'  <bounds minlat="{MIN_LAT!r}" minlon="{MIN_LON!r}" maxlat="{max_lat!r}" maxlon="{max_lon!r}"/>'
    return "\n".join(['<?xml version="1.0" encoding="UTF-8"?>', '<osm version="0.6" generator="fixture">', bounds]
                     + nodes + ways + ["</osm>", ""])


def main():
    here = os.path.dirname(os.path.abspath(__file__))
    grid = oracle()
    with open(os.path.join(here, "crossroads.osm"), "w") as f:
        f.write(osm())
    with open(os.path.join(here, "crossroads_oracle.map"), "w") as f:
        f.write(f"type octile\nheight {ROWS}\nwidth {COLS}\nmap\n")
        for row in grid:
            f.write("".join("@" if o else "." for o in row) + "\n")
    count = sum(map(sum, grid))
    with open(os.path.join(here, "crossroads_oracle.txt"), "w") as f:
        f.write(f"{count}\n")
    print(f"{ROWS}x{COLS}, obstacles {count}")


if __name__ == "__main__":
    main()
