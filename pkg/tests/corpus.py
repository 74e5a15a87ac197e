"""Labeled test polynomials with hand-derived ground truth.

Each entry is ``(text, dim, label, kernel_dim)``.  Labels follow
``MorseBottVerdict.label()``; the reduced functions behind the
NotMorseBott labels are noted inline.
"""

LABELED = [
    ("x1^2 + x2^2", 2, "Morse", 0),
    ("x1^2 - x2^2", 2, "Morse", 0),
    ("x1^2 + x1^3", 1, "Morse", 0),
    ("x1*x2", 2, "Morse", 0),
    ("(x1 + x2^2)^2", 2, "MorseBott(1)", 1),
    ("x1^2", 2, "MorseBott(1)", 1),
    ("x1^2 + 2*x1*x2 + x2^2", 2, "MorseBott(1)", 1),
    ("x1^2 + x2^2", 3, "MorseBott(1)", 1),
    ("x1^2", 3, "MorseBott(2)", 2),
    ("(x1 + x2^2 + x3^2)^2", 3, "MorseBott(2)", 2),
    ("x1^2 + x2^4", 2, "NotMorseBott(4)", 1),                  # g = y^4
    ("x1^2 + x2^4 + x2^6", 2, "NotMorseBott(4)", 1),           # g = y^4 + y^6
    ("x1^3 - 3*x1*x2^2", 2, "NotMorseBott(3)", 2),             # g = f
    ("x1^2*x2^2", 2, "NotMorseBott(4)", 2),                    # g = y1^2 y2^2
    ("x3^2 + x1^2*x2^2", 3, "NotMorseBott(4)", 2),             # g = y1^2 y2^2
    ("x1^2 - x2^2 + x1*x3^2 + x3^4", 3, "NotMorseBott(4)", 1),  # g = 3/4 y^4
    ("2*x1^2 + x2^2 + x1*x2*x3 + x3^3", 3, "NotMorseBott(3)", 1),  # g = y^3
    ("x1^4", 1, "NotMorseBott(4)", 1),
]

# Functions for the splitting residual checks.
SPLITTING = [
    ("x1^2 + x2^2", 2),
    ("x1^2 - x2^2", 2),
    ("x1^2 + x1*x2 + 2*x2^2 - x3^2", 3),
    ("x1^2 + x1^3", 1),
    ("(x1 + x2^2)^2", 2),
    ("x1^2 + x2^4", 2),
    ("x1^2 + x2^4 + x2^6", 2),
    ("x1^2 + 2*x1*x2 + x2^2", 2),
    ("x1^2 - x2^2 + x1*x3^2 + x3^4", 3),
    ("2*x1^2 + x2^2 + x1*x2*x3 + x3^3", 3),
    ("x1^2 + x1^3 + x2^2 - x2^3 + x1*x3^2 + x3^4", 3),
    ("(x1 + x2^2 + x3^2)^2", 3),
]
