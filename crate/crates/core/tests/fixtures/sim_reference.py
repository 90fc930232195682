    counts = {}
    # skip blank lines
    for line in lines:
        line = line.strip()
        if not line:
            continue
        # split on the first colon
        key, _, value = line.partition(":")
        if key in counts:
            counts[key] += int(value)
        else:
            counts[key] = int(value)
    return counts
