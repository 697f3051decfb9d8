#!/usr/bin/env python3
"""Generate the coarse AVS-UCD meshes for the FSI-1 and 2D-1 channel benchmarks.

Block-structured quadrilateral mesh: a tensor grid over the channel with the
square [0.1, 0.3]^2 replaced by an O-grid around the cylinder. The elastic
beam occupies y in [0.19, 0.21] from the cylinder up to x = 0.6.

Boundary ids: 0 inflow, 1 outflow, 2 walls, 80 cylinder (fluid side),
81 cylinder arc under the beam. Material ids: 0 fluid, 1 solid.

Usage: python3 tools/gen_meshes.py [outdir]
"""
import math
import sys

H = 0.41
CX, CY, R = 0.2, 0.2, 0.05
BEAM_Y0, BEAM_Y1, BEAM_X1 = 0.19, 0.21, 0.6
RING = [0.0, 0.4, 1.0]


def build(length, solid_beam, xs_tail):
    xs = [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6] + xs_tail
    assert abs(xs[-1] - length) < 1e-14
    ys = [0.0, 0.05, 0.1, 0.15, BEAM_Y0, BEAM_Y1, 0.25, 0.3, 0.355, H]

    points = []
    index = {}

    def pid(x, y):
        key = (round(x, 12), round(y, 12))
        if key not in index:
            index[key] = len(points)
            points.append((x, y))
        return index[key]

    cells = []  # (material, [v0, v1, v2, v3]) counter-clockwise
    for i in range(len(xs) - 1):
        for j in range(len(ys) - 1):
            x0, x1, y0, y1 = xs[i], xs[i + 1], ys[j], ys[j + 1]
            if 0.1 <= x0 and x1 <= 0.3 and 0.1 <= y0 and y1 <= 0.3:
                continue
            solid = solid_beam and y0 == BEAM_Y0 and y1 == BEAM_Y1 and x0 >= 0.3 and x1 <= BEAM_X1
            cells.append((1 if solid else 0, [pid(x0, y0), pid(x1, y0), pid(x1, y1), pid(x0, y1)]))

    # perimeter of the square, counter-clockwise starting at (0.3, 0.1)
    sx = [x for x in xs if 0.1 <= x <= 0.3]
    sy = [y for y in ys if 0.1 <= y <= 0.3]
    perim = []
    perim += [(0.3, y) for y in sy[:-1]]
    perim += [(x, 0.3) for x in reversed(sx[1:])]
    perim += [(0.1, y) for y in reversed(sy[1:])]
    perim += [(x, 0.1) for x in sx[:-1]]

    def circle_point(p):
        x, y = p
        if x == 0.3 and y in (BEAM_Y0, BEAM_Y1):
            ang = math.asin((y - CY) / R)
        else:
            ang = math.atan2(y - CY, x - CX)
        return (CX + R * math.cos(ang), CY + R * math.sin(ang))

    rings = []
    for p in perim:
        c = circle_point(p)
        ring = []
        for t in RING:
            if t == 1.0:
                ring.append(pid(*p))
            else:
                ring.append(pid(c[0] + t * (p[0] - c[0]), c[1] + t * (p[1] - c[1])))
        rings.append(ring)

    lines = []
    n = len(perim)
    for k in range(n):
        a, b = rings[k], rings[(k + 1) % n]
        pa, pb = perim[k], perim[(k + 1) % n]
        solid = solid_beam and pa == (0.3, BEAM_Y0) and pb == (0.3, BEAM_Y1)
        for layer in range(len(RING) - 1):
            cells.append((1 if solid else 0, [a[layer], a[layer + 1], b[layer + 1], b[layer]]))
        beam_arc = pa == (0.3, BEAM_Y0) and pb == (0.3, BEAM_Y1)
        lines.append((81 if beam_arc else 80, b[0], a[0]))

    eps = 1e-12
    for _, vs in cells:
        for f in range(4):
            a, b = vs[f], vs[(f + 1) % 4]
            (xa, ya), (xb, yb) = points[a], points[b]
            if abs(xa) < eps and abs(xb) < eps:
                lines.append((0, a, b))
            elif abs(xa - length) < eps and abs(xb - length) < eps:
                lines.append((1, a, b))
            elif (abs(ya) < eps and abs(yb) < eps) or (abs(ya - H) < eps and abs(yb - H) < eps):
                lines.append((2, a, b))
    return points, cells, lines


def write(path, title, points, cells, lines):
    with open(path, "w") as f:
        f.write(f"# {title}\n")
        f.write("# boundary ids: 0 inflow, 1 outflow, 2 walls, 80 cylinder, 81 cylinder arc under beam\n")
        f.write("# material ids: 0 fluid, 1 solid\n")
        f.write(f"{len(points)} {len(cells) + len(lines)} 0 0 0\n")
        for i, (x, y) in enumerate(points):
            f.write(f"{i + 1} {x:.16g} {y:.16g} 0\n")
        k = 1
        for mat, vs in cells:
            f.write(f"{k} {mat} quad {' '.join(str(v + 1) for v in vs)}\n")
            k += 1
        for bid, a, b in lines:
            f.write(f"{k} {bid} line {a + 1} {b + 1}\n")
            k += 1


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "meshes"
    tail_fsi = [0.7, 0.8, 0.95, 1.1, 1.3, 1.5, 1.75, 2.0, 2.25, 2.5]
    tail_flow = [0.7, 0.8, 0.95, 1.1, 1.3, 1.5, 1.7, 1.95, 2.2]
    write(f"{out}/fsi1.inp", "FSI-1 channel with cylinder and elastic beam", *build(2.5, True, tail_fsi))
    write(f"{out}/flow2d1.inp", "2D-1 channel with cylinder (beam region is fluid)", *build(2.2, False, tail_flow))


if __name__ == "__main__":
    main()
