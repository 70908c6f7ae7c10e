"""Writes the synthetic 60 x 40 x 40 density field used by topopt3d.json.

A wall on the left, a plate on top and two slender columns under the right
edge, with a one-voxel halo of 0.3 that the 0.5 threshold removes.
"""

import itertools

NX, NY, NZ = 60, 40, 40


def solid(i, j, k):
    wall = i < 4
    plate = k >= 35
    column = 54 <= i < 58 and (2 <= j < 6 or 34 <= j < 38)
    return wall or plate or column


def main(path="topopt_60x40x40.txt"):
    rho = {}
    for i, j, k in itertools.product(range(NX), range(NY), range(NZ)):
        if solid(i, j, k):
            rho[i, j, k] = 1.0
        elif any(
            solid(i + a, j + b, k + c)
            for a, b, c in itertools.product((-1, 0, 1), repeat=3)
            if 0 <= i + a < NX and 0 <= j + b < NY and 0 <= k + c < NZ
        ):
            rho[i, j, k] = 0.3
        else:
            rho[i, j, k] = 0.0
    with open(path, "w") as f:
        f.write(f"{NX} {NY} {NZ}\n")
        for k in range(NZ):
            for j in range(NY):
                f.write(" ".join(f"{rho[i, j, k]:g}" for i in range(NX)) + "\n")


if __name__ == "__main__":
    main()
