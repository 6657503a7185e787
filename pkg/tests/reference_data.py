"""Published reference values the acceptance suite reproduces.

REVERSAL_TABLE: percentage probability that an arbitrary accepted block is
ever reversed, by attacker share (rows) and confirmation count (columns
1..10).  Entries of 0.0 stand for the source's "approximately zero" cells,
meaning a value below 0.005%.

FRACTION_SPOT_CELLS: spot values of the optimal long-run reversed fraction
(percent), keyed by (alpha, confirmations).

POLICY_GRID_G0: optimal attack actions for alpha=0.26, gamma=0 against a
2-confirmation defender; rows are attacker branch length 0..10, columns
honest branch length 0..10; '*' marks states the source lists as unreachable.

POLICY_GRID_G05: the gamma=0.5 grid for branch lengths up to 6; each cell is
one action character per fork status (none possible / tie possible / tie
live).
"""

REVERSAL_TABLE = {
    0.02: [0.24, 0.02, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    0.06: [2.16, 0.42, 0.09, 0.02, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    0.10: [5.98, 1.85, 0.60, 0.20, 0.07, 0.03, 0.0, 0.0, 0.0, 0.0],
    0.14: [11.66, 4.88, 2.11, 0.93, 0.42, 0.19, 0.09, 0.04, 0.02, 0.0],
    0.18: [19.13, 9.94, 5.32, 2.90, 1.60, 0.89, 0.50, 0.28, 0.16, 0.09],
    0.22: [28.27, 17.33, 10.89, 6.95, 4.48, 2.91, 1.91, 1.25, 0.83, 0.55],
    0.26: [38.90, 27.17, 19.36, 13.97, 10.17, 7.45, 5.49, 4.06, 3.01, 2.23],
    0.30: [50.70, 39.33, 30.98, 24.64, 19.73, 15.88, 12.84, 10.41, 8.46, 6.89],
    0.34: [63.23, 53.37, 45.55, 39.14, 33.81, 29.31, 25.49, 22.21, 19.39, 16.95],
    0.38: [75.80, 68.45, 62.25, 56.85, 52.09, 47.85, 44.03, 40.58, 37.45, 34.56],
    0.42: [87.35, 83.09, 79.31, 75.86, 72.68, 69.72, 66.95, 64.33, 61.83, 59.44],
    0.46: [96.26, 94.88, 93.61, 92.41, 91.27, 90.17, 89.10, 88.05, 86.99, 85.82],
    0.48: [98.98, 98.59, 98.23, 97.88, 97.54, 97.21, 96.88, 96.54, 96.15, 95.60],
    0.50: [100.0] * 10,
}

FRACTION_SPOT_CELLS = {
    (0.02, 1): 0.08,
    (0.10, 3): 0.16,
    (0.30, 6): 4.23,
    (0.38, 10): 11.84,
    (0.46, 1): 69.53,
}

POLICY_GRID_G0 = [
    "w a * * * * * * * * *",
    "w w w a * * * * * * *",
    "w w w w a w a * * * *",
    "w w o w w w w a * * *",
    "w w w o w w w w a * *",
    "w w w w o w w w w a *",
    "w w w w w o w w w w a",
    "w w w w w w o w w w w",
    "w w w w w w w o w w w",
    "w w w w w w w w o w w",
    "w w w w w w w w w o w",
]

POLICY_GRID_G05 = [
    ["w**", "aa*", "***", "***", "***", "***", "***"],
    ["w**", "*w*", "w**", "a**", "***", "***", "***"],
    ["w**", "ww*", "wm*", "w**", "a**", "***", "***"],
    ["w**", "ww*", "www", "wm*", "w**", "a**", "***"],
    ["w**", "ww*", "www", "wmw", "wm*", "w**", "a**"],
    ["w**", "ww*", "www", "www", "omw", "wm*", "w**"],
    ["w**", "ww*", "www", "www", "*mw", "omw", "wm*"],
]
