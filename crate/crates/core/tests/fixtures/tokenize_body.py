    # square the inputs
    sep = "# not a comment";  # trailing
    return [v ** 2 for v in xs]
