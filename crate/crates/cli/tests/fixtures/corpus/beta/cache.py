# SPDX-License-Identifier: BSD-3-Clause
import time


def evict_stale(cache, max_age, now=None):
    """Drop entries older than max_age seconds and return how many went."""
    if now is None:
        now = time.time()
    removed = 0
    for key in list(cache):
        stamp, value = cache[key]
        # entries without a timestamp never expire
        if stamp is None:
            continue
        if now - stamp > max_age:
            del cache[key]
            removed += 1
        elif value is None:
            del cache[key]
            removed += 1
    if removed and not cache:
        cache.clear()
    return removed
