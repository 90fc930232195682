# Copyright (c) 2019 Example Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.

import os
import re
from collections import OrderedDict

_CACHE = OrderedDict()
PATTERN = re.compile(r"\d+")


def count_numbers(path, limit=10):
    """Count numeric tokens in a file.

    Stops after ``limit`` matches.
    """
    if path in _CACHE:
        return _CACHE[path]  # cached
    total = 0
    with open(path) as fh:
        for line in fh:
            # each match counts once
            total += len(PATTERN.findall(line))
            if total >= limit:
                break
    _CACHE[path] = total
    return total
