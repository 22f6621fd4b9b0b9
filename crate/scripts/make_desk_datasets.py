#!/usr/bin/env python3
"""Build the two desk datasets under data/ in the benchmark layout
(tableA.csv, tableB.csv, train.csv, valid.csv, test.csv).

Sources are the BSD-licensed sample tables shipped in the
py_entitymatching 0.4.2 source distribution:

    pip download --no-deps --no-binary :all: py_entitymatching==0.4.2
    tar xzf py-entitymatching-0.4.2.tar.gz
    python3 scripts/make_desk_datasets.py py-entitymatching-0.4.2/py_entitymatching/datasets

fodors-zagats: restaurant tables plus the gold match list; non-match
candidates are the highest-overlap non-matching pairs, topped up to 946
candidates in total. dblp-acm-demo: the 450 labeled citation pairs of the
end-to-end demo. Splits are 3:1:1, stratified by label, fixed seed.
"""
import csv
import os
import random
import sys


def read(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def write(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def tokens(s):
    return set((s or "").lower().split())


def jaccard(a, b):
    a, b = tokens(a), tokens(b)
    return len(a & b) / len(a | b) if a | b else 0.0


def split(cands, seed):
    rng = random.Random(seed)
    out = {"train": [], "valid": [], "test": []}
    for label in (1, 0):
        group = [c for c in cands if c[2] == label]
        rng.shuffle(group)
        n = len(group)
        a, b = round(n * 0.6), round(n * 0.8)
        out["train"] += group[:a]
        out["valid"] += group[a:b]
        out["test"] += group[b:]
    for rows in out.values():
        rng.shuffle(rows)
    return out


def emit(dest, table_a, table_b, cols, cands, seed):
    os.makedirs(dest, exist_ok=True)
    write(os.path.join(dest, "tableA.csv"), ["id"] + cols, [[r["id"]] + [r[c] for c in cols] for r in table_a])
    write(os.path.join(dest, "tableB.csv"), ["id"] + cols, [[r["id"]] + [r[c] for c in cols] for r in table_b])
    for name, rows in split(cands, seed).items():
        write(os.path.join(dest, f"{name}.csv"), ["ltable_id", "rtable_id", "label"], rows)


def fodors_zagats(src, dest, total=946):
    base = os.path.join(src, "end-to-end", "restaurants")
    fodors = read(os.path.join(base, "fodors.csv"))
    zagats = read(os.path.join(base, "zagats.csv"))
    gold = {(m["fodors_id"], m["zagats_id"]) for m in read(os.path.join(base, "matches_fodors_zagats.csv"))}
    cands = [(f, z, 1) for f, z in sorted(gold)]
    scored = []
    for f in fodors:
        for z in zagats:
            if (f["id"], z["id"]) in gold:
                continue
            s = jaccard(f["name"], z["name"]) + 0.5 * jaccard(f["addr"], z["addr"]) + 0.25 * (f["city"] == z["city"])
            if s > 0:
                scored.append((-s, int(f["id"]), int(z["id"])))
    scored.sort()
    for _, f, z in scored[: total - len(cands)]:
        cands.append((str(f), str(z), 0))
    cols = ["name", "addr", "city", "phone", "type"]
    emit(dest, fodors, zagats, cols, cands, seed=7)


def dblp_acm_demo(src, dest):
    base = os.path.join(src, "end-to-end")
    dblp = read(os.path.join(base, "dblp_demo.csv"))
    acm = read(os.path.join(base, "acm_demo.csv"))
    labeled = read(os.path.join(base, "labeled_data_demo.csv"))
    for r in dblp + acm:
        r["year"] = r.pop("paper year")
    cands = [(r["ltable_id"], r["rtable_id"], int(r["label"])) for r in labeled]
    cols = ["title", "authors", "venue", "year"]
    emit(dest, dblp, acm, cols, cands, seed=7)


if __name__ == "__main__":
    src = sys.argv[1]
    root = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data")
    fodors_zagats(src, os.path.join(root, "fodors-zagats"))
    dblp_acm_demo(src, os.path.join(root, "dblp-acm-demo"))
