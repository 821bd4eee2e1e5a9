"""Room-grid maze generator for the shipped fixtures.

Each room is `room` cells square, walls are `wall` cells thick. Rooms are
joined along a random spanning tree plus `extra` loop edges, and every
joint opens the full room width.

    python3 gen_maze.py 6 6 1 3 maze1.txt
    python3 gen_maze.py 6 6 2 4 maze2.txt
"""
import random
import sys


def maze(nc, nr, seed, extra, room=10, wall=2):
    rnd = random.Random(seed)
    w = nc * (room + wall) + wall
    h = nr * (room + wall) + wall
    g = [['#'] * w for _ in range(h)]

    def corner(i, j):
        return wall + i * (room + wall), wall + j * (room + wall)

    for i in range(nc):
        for j in range(nr):
            x0, y0 = corner(i, j)
            for y in range(y0, y0 + room):
                for x in range(x0, x0 + room):
                    g[y][x] = '.'
    seen = {(0, 0)}
    stack = [(0, 0)]
    edges = set()
    while stack:
        c = stack[-1]
        i, j = c
        nb = [(i + di, j + dj) for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1))
              if 0 <= i + di < nc and 0 <= j + dj < nr and (i + di, j + dj) not in seen]
        if not nb:
            stack.pop()
            continue
        n = rnd.choice(nb)
        seen.add(n)
        edges.add(tuple(sorted((c, n))))
        stack.append(n)
    every = [((i, j), (i + 1, j)) for i in range(nc - 1) for j in range(nr)]
    every += [((i, j), (i, j + 1)) for i in range(nc) for j in range(nr - 1)]
    rest = [e for e in every if e not in edges]
    rnd.shuffle(rest)
    edges |= set(rest[:extra])
    for (i, j), (k, _) in edges:
        x0, y0 = corner(i, j)
        if k > i:
            for y in range(y0, y0 + room):
                for x in range(x0 + room, x0 + room + wall):
                    g[y][x] = '.'
        else:
            for x in range(x0, x0 + room):
                for y in range(y0 + room, y0 + room + wall):
                    g[y][x] = '.'
    return '\n'.join(''.join(r) for r in g) + '\n'


if __name__ == '__main__':
    nc, nr, seed, extra = (int(a) for a in sys.argv[1:5])
    with open(sys.argv[5], 'w') as f:
        f.write(maze(nc, nr, seed, extra))
