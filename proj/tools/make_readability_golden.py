#!/usr/bin/env python3
"""Regenerates tests/data/readability_golden.tsv.

Computes the seven readability scores from their published formulas (sentence
count fixed at 1), independently of the C++ implementation.  Tokenization and
syllable counting follow the documented rules: words are maximal runs of
letters/digits plus internal apostrophes/hyphens; syllables are vowel groups
(a,e,i,o,u,y) minus a silent final e, floored at 1.
"""

import math
import os
import re

HERE = os.path.dirname(os.path.abspath(__file__))
LEXDIR = os.path.join(HERE, "..", "data", "lexicons")
OUT = os.path.join(HERE, "..", "tests", "data", "readability_golden.tsv")

SENTENCES = [
    "The cat sat.",
    "Water boils at one hundred degrees under standard pressure.",
    "Extraordinary bureaucratic inefficiencies characterize contemporary administrative apparatuses.",
    "She quickly read the small book before dinner.",
    "Thermodynamic equilibrium requires homogeneous temperature distribution throughout the system.",
    "Is this the state-of-the-art solution, or merely a compromise?",
    "Birds fly.",
    "The committee unanimously recommended immediate implementation of the proposal.",
    "A gentle breeze drifted over the quiet village green at dusk.",
    "Quantum entanglement correlations violate classical locality assumptions dramatically.",
]


def words_of(text):
    # maximal runs of alphanumerics with internal ' and -
    return re.findall(r"[A-Za-z0-9]+(?:['\-][A-Za-z0-9]+)*", text)


def punct_of(text):
    stripped = re.sub(r"[A-Za-z0-9\s]|(?<=[A-Za-z0-9])['\-](?=[A-Za-z0-9])", "", text)
    return list(stripped)


def syllables(word):
    w = word.lower()
    groups = len(re.findall(r"[aeiouy]+", w))
    if len(w) >= 2 and w.endswith("e") and w[-2] not in "aeiouy" and groups > 1:
        groups -= 1
    return max(1, groups)


def load_familiar():
    familiar = set()
    with open(os.path.join(LEXDIR, "dale_chall_familiar.txt")) as f:
        for line in f:
            line = line.strip()
            if line and not line.startswith("#"):
                familiar.add(line)
    return familiar


def main():
    familiar = load_familiar()
    rows = []
    for text in SENTENCES:
        ws = words_of(text)
        w = len(ws)
        letters = sum(1 for word in ws for ch in word if ch.isalpha())
        chars = sum(len(word) for word in ws)
        punct = len(punct_of(text))
        syl = sum(syllables(word) for word in ws)
        poly = sum(1 for word in ws if syllables(word) >= 3)
        unfamiliar = sum(1 for word in ws if word.lower() not in familiar)

        flesch = 206.835 - 1.015 * (w / 1) - 84.6 * (syl / w)
        smog = 1.0430 * math.sqrt(poly * 30 / 1) + 3.1291
        cl = 0.0588 * (letters / w * 100) - 0.296 * (1 / w * 100) - 15.8
        ari = 4.71 * (chars / w) + 0.5 * (w / 1) - 21.43
        pdw = 100 * unfamiliar / w
        dc = 0.1579 * pdw + 0.0496 * w + (3.6365 if pdw > 5 else 0.0)
        points = sum(1 if syllables(word) < 3 else 3 for word in ws)
        r = points / 1
        linsear = r / 2 if r > 20 else r / 2 - 1
        fog = 0.4 * (w / 1 + 100 * poly / w)

        rows.append(
            [text, w, letters, chars, punct, syl, poly, unfamiliar]
            + ["%.12f" % v for v in (flesch, smog, cl, ari, dc, linsear, fog)]
        )

    with open(OUT, "w") as f:
        f.write(
            "# text\twords\tletters\tchars\tpunct\tsyllables\tpolysyllables"
            "\tunfamiliar\tflesch\tsmog\tcoleman_liau\tari\tdale_chall"
            "\tlinsear\tfog\n"
        )
        for row in rows:
            f.write("\t".join(str(v) for v in row) + "\n")
    print("wrote", OUT)


if __name__ == "__main__":
    main()
