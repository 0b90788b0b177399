"""Generate the porescale mesh fixtures in data/meshes with gmsh.

  porescale_2d.msh        annulus 0.25 < |x| < 1 with four circular grains
  ball_two_holes_3d.msh   unit ball with two spherical grains

Vertices within `layer` of a grain surface get tag 1 (initial biofilm);
all others get tag 0. Output is the plain text format read by import_mesh.

Usage: python tools/make_porescale_meshes.py [output_dir]
"""

import math
import pathlib
import sys

import gmsh
import numpy as np


def extract(dim):
    types, _, conn = gmsh.model.mesh.getElements(dim)
    tags, coords, _ = gmsh.model.mesh.getNodes()
    coords = coords.reshape(-1, 3)
    index = {int(t): k for k, t in enumerate(tags)}
    cells = np.array([index[int(v)] for v in conn[0]]).reshape(-1, dim + 1)
    used = np.unique(cells)
    renumber = -np.ones(len(tags), dtype=int)
    renumber[used] = np.arange(len(used))
    return coords[used, :dim], renumber[cells]


def orient(points, cells):
    dim = points.shape[1]
    for c in cells:
        edges = np.array([points[c[k]] - points[c[0]] for k in range(1, dim + 1)])
        if np.linalg.det(edges) < 0:
            c[0], c[1] = c[1], c[0]
    return cells


def write(path, points, cells, vertex_tags):
    dim = points.shape[1]
    with open(path, "w") as f:
        f.write(f"# generated by tools/make_porescale_meshes.py\n")
        f.write(f"{dim} {len(points)} {len(cells)}\n")
        for p, t in zip(points, vertex_tags):
            f.write(" ".join(f"{x:.12g}" for x in p) + f" {t}\n")
        for c in cells:
            tag = int(all(vertex_tags[v] for v in c))
            f.write(" ".join(str(v) for v in c) + f" {tag}\n")
    print(f"{path}: {len(points)} vertices, {len(cells)} cells, "
          f"{int(np.sum(vertex_tags))} tagged")


def annulus_with_grains(path, h=0.035, layer=0.06):
    inner = 0.25
    grains = [(0.6 * math.cos(a), 0.6 * math.sin(a), 0.14)
              for a in (0.25 * math.pi, 0.75 * math.pi, 1.25 * math.pi, 1.75 * math.pi)]
    gmsh.model.add("annulus")
    occ = gmsh.model.occ
    disk = occ.addDisk(0, 0, 0, 1, 1)
    holes = [occ.addDisk(0, 0, 0, inner, inner)]
    holes += [occ.addDisk(x, y, 0, r, r) for x, y, r in grains]
    occ.cut([(2, disk)], [(2, t) for t in holes])
    occ.synchronize()
    gmsh.option.setNumber("Mesh.MeshSizeMin", h)
    gmsh.option.setNumber("Mesh.MeshSizeMax", h)
    gmsh.model.mesh.generate(2)
    points, cells = extract(2)

    def grain_distance(p):
        d = abs(math.hypot(p[0], p[1]) - inner)
        for x, y, r in grains:
            d = min(d, abs(math.hypot(p[0] - x, p[1] - y) - r))
        return d

    tags = np.array([int(grain_distance(p) <= layer) for p in points])
    write(path, points, orient(points, cells), tags)


def ball_with_two_holes(path, h=0.12, layer=0.12):
    grains = [(-0.45, 0.0, 0.0, 0.3), (0.45, 0.0, 0.0, 0.3)]
    gmsh.model.add("ball")
    occ = gmsh.model.occ
    ball = occ.addSphere(0, 0, 0, 1)
    holes = [occ.addSphere(x, y, z, r) for x, y, z, r in grains]
    occ.cut([(3, ball)], [(3, t) for t in holes])
    occ.synchronize()
    gmsh.option.setNumber("Mesh.MeshSizeMin", h)
    gmsh.option.setNumber("Mesh.MeshSizeMax", h)
    gmsh.model.mesh.generate(3)
    points, cells = extract(3)

    def grain_distance(p):
        return min(abs(math.dist(p, (x, y, z)) - r) for x, y, z, r in grains)

    tags = np.array([int(grain_distance(p) <= layer) for p in points])
    write(path, points, orient(points, cells), tags)


def main():
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else
                       pathlib.Path(__file__).resolve().parent.parent / "data" / "meshes")
    out.mkdir(parents=True, exist_ok=True)
    gmsh.initialize()
    gmsh.option.setNumber("General.Terminal", 0)
    gmsh.option.setNumber("Mesh.RandomSeed", 1)
    try:
        annulus_with_grains(out / "porescale_2d.msh")
        ball_with_two_holes(out / "ball_two_holes_3d.msh")
    finally:
        gmsh.finalize()


if __name__ == "__main__":
    main()
