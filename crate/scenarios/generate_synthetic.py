#!/usr/bin/env python3
"""Regenerates the synthetic building layers shipped with the example scenarios.

Output is deterministic: footprints come from a fixed layout and heights from
a seeded PRNG. Run from this directory: `python3 generate_synthetic.py`.
"""
import json
import math
import random

EARTH_RADIUS_M = 6378137.0


def enu_to_geo(x, y, lat0, lon0):
    lat = lat0 + math.degrees(y / EARTH_RADIUS_M)
    lon = lon0 + math.degrees(x / (EARTH_RADIUS_M * math.cos(math.radians(lat0))))
    return lat, lon


def feature(fid, ring_xy, height, lat0, lon0):
    ring = []
    for x, y in ring_xy + ring_xy[:1]:
        lat, lon = enu_to_geo(x, y, lat0, lon0)
        ring.append([lon, lat])
    return {
        "type": "Feature",
        "id": fid,
        "properties": {"building": "yes", "height": height},
        "geometry": {"type": "Polygon", "coordinates": [ring]},
    }


def rect(x0, y0, w, d):
    return [(x0, y0), (x0 + w, y0), (x0 + w, y0 + d), (x0, y0 + d)]


def write(path, features):
    with open(path, "w") as f:
        json.dump({"type": "FeatureCollection", "features": features}, f, indent=1)
        f.write("\n")


def urban_canyon():
    # 20 rectangular buildings of random size scattered over the 580 m x 460 m
    # area with at least 15 m between neighbours, like an irregular campus.
    # The transmitter mast goes at a random open spot near the center.
    lat0, lon0 = 35.7275, -78.6960
    rng = random.Random(0)
    rects = []
    while len(rects) < 20:
        w, d = rng.uniform(25, 80), rng.uniform(20, 60)
        x0, y0 = rng.uniform(-280, 280 - w), rng.uniform(-220, 220 - d)
        if all(
            x0 > r[1][0] + 15 or x0 + w < r[0][0] - 15 or y0 > r[2][1] + 15 or y0 + d < r[0][1] - 15
            for r in rects
        ):
            rects.append(rect(x0, y0, w, d))
    while True:
        tx = (rng.uniform(-60, 60), rng.uniform(-60, 60))
        if all(not (r[0][0] - 3 < tx[0] < r[1][0] + 3 and r[0][1] - 3 < tx[1] < r[2][1] + 3) for r in rects):
            break
    features = [
        feature(f"bldg-{k:02}", r, round(rng.uniform(10.5, 29.5), 1), lat0, lon0) for k, r in enumerate(rects)
    ]
    write("urban_canyon.geojson", features)
    print(f"urban canyon transmitter: tx_east_m = {tx[0]:.1f}, tx_north_m = {tx[1]:.1f}")


def rural_farm():
    # A farmstead: house, barn and two sheds in an open field.
    lat0, lon0 = 35.7270, -78.6965
    parts = [
        ("house", rect(115.0, 65.0, 14.0, 11.0), 7.5),
        ("barn", rect(145.0, 55.0, 24.0, 16.0), 9.5),
        ("shed-a", rect(-175.0, -125.0, 9.0, 7.0), 4.5),
        ("shed-b", rect(-155.0, -145.0, 11.0, 6.0), 4.5),
    ]
    write("rural_farm.geojson", [feature(fid, r, h, lat0, lon0) for fid, r, h in parts])


if __name__ == "__main__":
    urban_canyon()
    rural_farm()
