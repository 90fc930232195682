# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
from collections import deque


def shortest_hops(graph, source, target):
    """Breadth-first hop count from source to target, or -1."""
    if source == target:
        return 0
    seen = {source}
    queue = deque([(source, 0)])
    while queue:
        node, dist = queue.popleft()
        # neighbours missing from the graph are treated as leaves
        for nxt in graph.get(node, ()):
            if nxt == target:
                return dist + 1
            if nxt not in seen:
                seen.add(nxt)
                queue.append((nxt, dist + 1))
    return -1
