"""Generate the synthetic stand-in for the User Knowledge Modeling CSV.

The attribute semantics match the UCI file (five degrees in [0,1] plus a
four-level UNS label) but every value is drawn from a seeded generator.
The label is driven by the PEG and LPR attributes with a small fraction of
samples pushed across the 0.5 cut, so binarized classifiers cannot reach a
perfect score.
"""

import csv
import random

COUNTS = {"very_low": 47, "Low": 121, "Middle": 114, "High": 121}
LEVEL = {"very_low": 0, "Low": 1, "Middle": 2, "High": 3}
NOISE = 0.025


def draw(bit, rng):
    return round(rng.uniform(0.5, 1.0) if bit else rng.uniform(0.0, 0.49), 3)


def main():
    rng = random.Random(20160403)
    rows = []
    for label, n in COUNTS.items():
        level = LEVEL[label]
        for _ in range(n):
            peg_bit = level >= 2
            lpr_bit = level % 2 == 1
            if rng.random() < NOISE:
                peg_bit = not peg_bit
            if rng.random() < NOISE:
                lpr_bit = not lpr_bit
            stg = round(rng.uniform(0.0, 1.0), 3)
            scg = round(rng.uniform(0.0, 1.0), 3)
            str_ = round(rng.uniform(0.0, 1.0), 3)
            rows.append((stg, scg, str_, draw(lpr_bit, rng), draw(peg_bit, rng), label))
    rng.shuffle(rows)
    with open("synthetic_ukm.csv", "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["STG", "SCG", "STR", "LPR", "PEG", "UNS"])
        out.writerows(rows)


if __name__ == "__main__":
    main()
