"""Convert the public SUPPORT right heart catheterization file (rhc.csv) into
the category-index layout described by codebook.json.

    python extract.py rhc.csv pafi  > rhc_pafi.csv
    python extract.py rhc.csv paco2 > rhc_paco2.csv
"""

import csv
import sys


def flag(value, threshold):
    return int(float(value) > threshold)


def convert(row, proxy):
    cats = {row["cat1"], row.get("cat2", "")}
    if proxy == "pafi":
        z = flag(row["pafi1"], 150)
    else:
        z = flag(row["paco21"], 37)
    return {
        "age_over_75": flag(row["age"], 75),
        "apache_over_40": flag(row["aps1"], 40),
        "surv2md_over_half": flag(row["surv2md1"], 0.5),
        "chf_or_arf": int("CHF" in cats or "ARF" in cats),
        "hematocrit_over_30": flag(row["hema1"], 30),
        "rhc": int(row["swang1"] == "RHC"),
        "proxy": z,
        "days": min(int(float(row["t3d30"])), 30),
    }


def main():
    path, proxy = sys.argv[1], sys.argv[2]
    if proxy not in ("pafi", "paco2"):
        sys.exit("proxy must be pafi or paco2")
    with open(path, newline="") as f:
        rows = [convert(r, proxy) for r in csv.DictReader(f)]
    out = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]))
    out.writeheader()
    out.writerows(rows)


if __name__ == "__main__":
    main()
