"""Walk the hexagon through every layer of the engine.

Six points on a cycle, unit edges.  As the scale grows the controlled-tuple
complex sees a circle, then a 2-sphere (the distance-2 graph of a hexagon is
the octahedron), then a point.  The coarsified theory forgets the metric
artifacts and lands on (Z, 0).
"""

from coarsehom import (
    coarse_components,
    coarsify_homology,
    cover_from_net,
    greedy_net,
    homology_at_scale,
    homology_colimit,
    make_explicit_space,
    nerve,
    rips_complex,
)


def hexagon():
    pts = list(range(6))
    edges = [(i, (i + 1) % 6) for i in range(6)]
    return make_explicit_space(pts, [edges], [pts])


def show(label, groups):
    body = ", ".join(str(g) for g in groups)
    print(f"  {label}: [{body}]")


def main():
    X = hexagon()
    print("hexagon:", X)
    print("coarse components:", coarse_components(X))

    print("\nhomology of the controlled-tuple complex by scale")
    for k in (1, 2, 3):
        show(f"scale {k}", homology_at_scale(X, k, 2))
    groups, stab = homology_colimit(X, 2)
    print(f"colimit stabilizes at scale {stab.stable_scale}")
    show("colimit", groups)

    print("\nclique-complex backend agrees at every scale")
    for k in (1, 2, 3):
        show(f"rips scale {k}", rips_complex(X, k, 3).homology(2))

    print("\ncoarsified homology (measure-complex colimit)")
    rep = coarsify_homology(X, [1], 1)
    show("at the edge scale", rep.table[1])
    show("terminal", rep.terminal)
    for note in rep.notes:
        print("  note:", note)

    print("\nthe hexagon as a net inside the 12-gon circle model")
    X12 = make_explicit_space(list(range(12)),
                              [[(i, (i + 1) % 12) for i in range(12)]],
                              [list(range(12))])
    net = greedy_net(X12, 1)
    print("  greedy net at scale 1:", net)
    show("net complex at the doubled scale", rips_complex(X12, 2, 3, points=net).homology(2))
    show("full circle complex", rips_complex(X12, 1, 3).homology(2))
    show("nerve of the ball cover", nerve(cover_from_net(X12, 1), 3).homology(2))


if __name__ == "__main__":
    main()
