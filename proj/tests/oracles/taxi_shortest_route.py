"""Shortest-route oracle for the default 10x10 single-passenger taxi.

Breadth-first search over (x, y, passenger status) with the six primitive
actions, then the discounted return of that route under the -1 / +20 reward
convention. Frozen into the taxi tests.
"""
from collections import deque

W, H = 10, 10
START, PASSENGER, DEST = (1, 1), (4, 3), (2, 2)
GAMMA = 0.95
WAITING, IN_TAXI, DELIVERED = 0, 1, 2


def successors(state):
    x, y, p = state
    for dx, dy in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        yield (min(max(x + dx, 1), W), min(max(y + dy, 1), H), p)
    if p == WAITING and (x, y) == PASSENGER:
        yield (x, y, IN_TAXI)
    if p == IN_TAXI and (x, y) == DEST:
        yield (x, y, DELIVERED)


def route_length():
    start = (*START, WAITING)
    dist = {start: 0}
    q = deque([start])
    while q:
        s = q.popleft()
        if s[2] == DELIVERED:
            return dist[s]
        for n in successors(s):
            if n not in dist:
                dist[n] = dist[s] + 1
                q.append(n)


if __name__ == "__main__":
    n = route_length()
    discounted = sum(-1.0 * GAMMA**t for t in range(n - 1)) + 20.0 * GAMMA ** (n - 1)
    print("steps", n)
    print("undiscounted", -(n - 1) + 20)
    print("discounted", repr(discounted))
