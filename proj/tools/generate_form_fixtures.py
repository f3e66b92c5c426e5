#!/usr/bin/env python3
"""Regenerate data/forms/*.json offline with PARI/GP (via the `cypari` wheel).

Every rational weight-2 newform with trivial character up to the requested
level gets a record holding a_1..a_COUNT. Labels follow the LMFDB convention
for rational forms: inside a level, dimension-one orbits come first, ordered
lexicographically by their coefficient sequence.

    python3 tools/generate_form_fixtures.py --max-level 100 --count 400 data/forms
"""

import argparse
import datetime
import json
import os
import string

from cypari import pari


def rational_newforms(level, count):
    mf = pari(f"mfinit([{level},2],0)")
    forms = []
    for f in pari.mfeigenbasis(mf):
        coeffs = list(pari.mfcoefs(f, count))
        if not all(str(pari.type(c)) == "t_INT" for c in coeffs):
            continue
        an = [int(c) for c in coeffs[1:]]
        if an[0] != 1:
            raise SystemExit(f"level {level}: unnormalised eigenform")
        forms.append(an)
    forms.sort()
    return forms


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--max-level", type=int, default=100)
    parser.add_argument("--count", type=int, default=400)
    parser.add_argument("out_dir")
    args = parser.parse_args()

    os.makedirs(args.out_dir, exist_ok=True)
    stamp = datetime.datetime.now(datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    written = 0
    for level in range(1, args.max_level + 1):
        for letter, an in zip(string.ascii_lowercase, rational_newforms(level, args.count)):
            label = f"{level}.2.a.{letter}"
            record = {
                "label": label,
                "level": level,
                "weight": 2,
                "an": an,
                "source": "fixture",
                "fetched_at": stamp,
            }
            path = os.path.join(args.out_dir, label + ".json")
            with open(path + ".tmp", "w") as fh:
                json.dump(record, fh, separators=(",", ":"))
                fh.write("\n")
            os.replace(path + ".tmp", path)
            written += 1
    print(f"wrote {written} records to {args.out_dir}")


if __name__ == "__main__":
    main()
