#!/usr/bin/env python3
"""Reference pipeline used to produce the golden files in this directory.

Written independently of the Rust crate: it re-derives the hash
pseudo-embedding, ranks by brute force (full sort for cosine, exhaustive
scan for kNN), scores with nDCG@k using math.log2, and builds the comparison
tables. Run from this directory:

    python3 reference.py ../../fixtures/corpus.json .

Sums are plain left-to-right loops (not sum()/fsum) to mirror ordinary
floating-point accumulation.
"""

import hashlib
import json
import math
import os
import sys
import unicodedata

DIM = 64
SEED = 0
K = 10
BACKEND = f"hash-d{DIM}-s{SEED}"


def tokenize(text):
    text = unicodedata.normalize("NFC", unicodedata.normalize("NFC", text).lower())
    out = []
    for tok in text.split():
        start, end = 0, len(tok)
        while start < end and not tok[start].isalnum():
            start += 1
        while end > start and not tok[end - 1].isalnum():
            end -= 1
        if start < end:
            out.append(tok[start:end])
    return out


def token_vector(tok):
    vals = []
    block = 0
    while len(vals) < DIM:
        d = hashlib.sha256(f"{SEED}:{tok}:{block}".encode("utf-8")).digest()
        for i in range(0, 32, 2):
            vals.append(int.from_bytes(d[i:i + 2], "big") / 32768.0 - 1.0)
        block += 1
    return vals[:DIM]


def embed(text):
    toks = tokenize(text)
    acc = [0.0] * DIM
    if not toks:
        return acc
    for t in toks:
        v = token_vector(t)
        for j in range(DIM):
            acc[j] += v[j]
    n = float(len(toks))
    return [a / n for a in acc]


def seqsum(xs):
    s = 0.0
    for x in xs:
        s += x
    return s


def cosine(a, b):
    dot = seqsum(x * y for x, y in zip(a, b))
    na = math.sqrt(seqsum(x * x for x in a))
    nb = math.sqrt(seqsum(x * x for x in b))
    if na * nb == 0.0:
        return 0.0
    return max(-1.0, min(1.0, dot / (na * nb)))


def dist(a, b):
    return math.sqrt(seqsum((x - y) * (x - y) for x, y in zip(a, b)))


def ndcg(ranking, relevant, k):
    dcg = 0.0
    for i, m in enumerate(ranking[:k], start=1):
        g = 1.0 if m in relevant else 0.0
        dcg += g if i == 1 else g / math.log2(i)
    ideal = 0.0
    for i in range(1, min(len(relevant), k) + 1):
        ideal += 1.0 if i == 1 else 1.0 / math.log2(i)
    return dcg / ideal if ideal > 0 else 0.0


def report(method, rankings, truth):
    per = {}
    for r in rankings:
        per[r["requirement"]] = ndcg([e["metric"] for e in r["ranking"]], set(truth[r["requirement"]]), K)
    vals = list(per.values())
    nz = [v for v in vals if v > 0.0]
    return {
        "method": method,
        "backend": BACKEND,
        "k": K,
        "per_requirement": per,
        "mean_nonzero": seqsum(nz) / len(nz) if nz else 0.0,
        "mean_all": seqsum(vals) / len(vals) if vals else 0.0,
        "nonzero_count": len(nz),
        "nonzero_mean_defined": bool(nz),
    }


def word_stats(texts):
    hist = {}
    total = 0
    for t in texts:
        c = len(t.split())
        hist[c] = hist.get(c, 0) + 1
        total += c
    return {
        "histogram": {str(k): hist[k] for k in sorted(hist)},
        "mean": total / len(texts),
        "n": len(texts),
        "total_words": total,
    }


def main(corpus_path, out_dir):
    with open(corpus_path, encoding="utf-8") as f:
        corpus = json.load(f)
    reqs = corpus["requirements"]
    mets = corpus["metrics"]
    truth = {m["requirement"]: m["metrics"] for m in corpus["mappings"]}

    # embedding store: requirements then metrics, first occurrence of each text
    seen = []
    for rec in reqs + mets:
        if rec["description"] not in seen:
            seen.append(rec["description"])
    with open(os.path.join(out_dir, "embeddings.jsonl"), "w", encoding="utf-8") as f:
        for text in seen:
            rec = {
                "key": hashlib.sha256(text.encode("utf-8")).hexdigest(),
                "backend": BACKEND,
                "dim": DIM,
                "values": embed(text),
            }
            f.write(json.dumps(rec, separators=(",", ":")) + "\n")

    mvec = [(m["id"], embed(m["description"])) for m in mets]
    cos_lists, knn_lists = [], []
    for r in reqs:
        q = embed(r["description"])
        cos = sorted(((mid, cosine(q, v)) for mid, v in mvec), key=lambda p: (-p[1], p[0]))
        cos_lists.append({"requirement": r["id"], "method": "cosine", "backend": BACKEND,
                          "ranking": [{"metric": m, "score": s} for m, s in cos]})
        near = sorted(((mid, dist(q, v)) for mid, v in mvec), key=lambda p: (p[1], p[0]))[:K]
        knn_lists.append({"requirement": r["id"], "method": "euclidean-knn", "backend": BACKEND,
                          "ranking": [{"metric": m, "score": s} for m, s in near]})

    for method, lists in (("cosine", cos_lists), ("euclidean-knn", knn_lists)):
        with open(os.path.join(out_dir, f"rankings-{BACKEND}-{method}.jsonl"), "w", encoding="utf-8") as f:
            for l in lists:
                f.write(json.dumps(l, separators=(",", ":")) + "\n")

    reports = [report("cosine", cos_lists, truth), report("euclidean-knn", knn_lists, truth)]
    for rep in reports:
        with open(os.path.join(out_dir, f"report-{BACKEND}-{rep['method']}.json"), "w", encoding="utf-8") as f:
            f.write(json.dumps(rep, indent=2) + "\n")

    # comparison against the kNN row as baseline
    base = reports[1]
    rows = []
    for rep in reports:
        rows.append({
            "backend": rep["backend"],
            "method": rep["method"],
            "mean_nonzero": rep["mean_nonzero"],
            "mean_all": rep["mean_all"],
            "nonzero_count": rep["nonzero_count"],
            "delta_nonzero": rep["mean_nonzero"] - base["mean_nonzero"],
            "delta_all": rep["mean_all"] - base["mean_all"],
        })
    rows.sort(key=lambda r: (-r["mean_nonzero"], r["backend"], r["method"]))
    comparison = {"k": K, "baseline": f"{BACKEND}/euclidean-knn", "rows": rows}
    with open(os.path.join(out_dir, "comparison.json"), "w", encoding="utf-8") as f:
        f.write(json.dumps(comparison, indent=2) + "\n")
    with open(os.path.join(out_dir, "comparison.csv"), "w", encoding="utf-8") as f:
        f.write("backend,method,mean_nonzero,mean_all,nonzero_count,delta_nonzero\n")
        for r in rows:
            f.write("%s,%s,%.6f,%.6f,%d,%.6f\n" % (r["backend"], r["method"], r["mean_nonzero"],
                                                   r["mean_all"], r["nonzero_count"], r["delta_nonzero"]))
    for name, field in (("plot_nonzero.tsv", "mean_nonzero"), ("plot_all.tsv", "mean_all")):
        with open(os.path.join(out_dir, name), "w", encoding="utf-8") as f:
            f.write("label\tvalue\n")
            for r in rows:
                f.write("%s (%s)\t%.6f\n" % (r["backend"], r["method"], r[field]))

    stats = {
        "requirements": word_stats([r["description"] for r in reqs]),
        "metrics": word_stats([m["description"] for m in mets]),
    }
    with open(os.path.join(out_dir, "word_stats.json"), "w", encoding="utf-8") as f:
        f.write(json.dumps(stats, indent=2) + "\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
