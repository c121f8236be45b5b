#!/usr/bin/env python3
"""Check that a tev-scan peak (and optionally a phase-track dip) lies near the
smallest transmission eigenvalue reported by `scatsig oracle tev`.

Exit status 0 when every requested check passes, 1 otherwise, 2 on bad input.
"""

import argparse
import csv
import json
import sys


def read_table(path):
    """Returns (config dict or None, list of row dicts)."""
    config = None
    body = []
    with open(path, newline="") as f:
        for line in f:
            if line.startswith("#"):
                text = line[1:].strip()
                if text.startswith("config:"):
                    config = json.loads(text[len("config:"):])
                continue
            body.append(line)
    return config, list(csv.DictReader(body))


def grid_step(config):
    parts = config["grid"].split(":")
    if len(parts) != 3:
        raise ValueError("expected a real grid lo:hi:step, got %r" % config["grid"])
    return float(parts[2])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--roots", required=True, help="tev_roots.csv from `scatsig oracle tev`")
    ap.add_argument("--peaks", required=True, help="tev_peaks.csv from `scatsig tev-scan`")
    ap.add_argument("--dips", help="phase_dips.csv from `scatsig phase-track`")
    ap.add_argument("--tol", type=float,
                    help="allowed distance; defaults to one grid step of the scan")
    args = ap.parse_args(argv)

    try:
        _, roots = read_table(args.roots)
        peak_cfg, peaks = read_table(args.peaks)
        if not roots:
            print("FAIL no oracle roots")
            return 1
        k1 = min(float(r["value"]) for r in roots)
        tol = args.tol if args.tol is not None else grid_step(peak_cfg)
    except (OSError, KeyError, ValueError) as e:
        print("error: %s" % e, file=sys.stderr)
        return 2

    ok = True
    peak_ks = [float(p["k"]) for p in peaks]
    best = min((abs(k - k1) for k in peak_ks), default=float("inf"))
    passed = best <= tol + 1e-12
    ok &= passed
    print("%s peak: oracle k1 = %.6f, nearest peak distance %.6f, tolerance %.6f"
          % ("PASS" if passed else "FAIL", k1, best, tol))

    if args.dips:
        try:
            _, dips = read_table(args.dips)
        except (OSError, ValueError) as e:
            print("error: %s" % e, file=sys.stderr)
            return 2
        dip_ks = [float(d["k"]) for d in dips]
        best = min((abs(k - k1) for k in dip_ks), default=float("inf"))
        passed = best <= tol + 1e-12
        ok &= passed
        print("%s dip: nearest dip distance %.6f, tolerance %.6f"
              % ("PASS" if passed else "FAIL", best, tol))
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
