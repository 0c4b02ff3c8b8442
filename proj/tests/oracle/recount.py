#!/usr/bin/env python3
"""Recounts evaluation metrics from records.jsonl and a dataset, from scratch.

Usage: recount.py RECORDS DATASET
Prints one JSON object with accuracy, invalid_sql_rate and call statistics.
Invalid sub-questions are counted from the chains themselves (no validated
query) and calls from the exchange list, not from the summary fields.
"""
import json
import math
import re
import sys

GROUPED = re.compile(r"[+-]?\d{1,3}(,\d{3})+(\.\d+)?")
NUMBER = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
YES = {"yes", "true", "entailed", "entails", "entail", "supported", "correct", "right"}
NO = {"no", "false", "refuted", "refutes", "refute", "unsupported", "incorrect", "wrong"}


def normalize(text):
    s = " ".join(text.lower().split())
    while s.endswith("."):
        s = s[:-1].rstrip(" ")
    return s


def number(part):
    if GROUPED.fullmatch(part):
        part = part.replace(",", "")
    if not part or not NUMBER.fullmatch(part):
        return None
    v = float(part)
    return v if math.isfinite(v) else None


def same_part(a, b):
    if a == b:
        return True
    x, y = number(a), number(b)
    if x is None or y is None:
        return False
    return abs(x - y) <= 1e-6 * max(abs(x), abs(y))


def parts(s):
    return [normalize(p) for p in re.split(r"\||, ", s)]


def multiset_equal(pred, gold):
    if len(pred) != len(gold):
        return False
    free = list(gold)
    for p in pred:
        for i, g in enumerate(free):
            if same_part(p, g):
                del free[i]
                break
        else:
            return False
    return True


def verdict(text):
    s = normalize(text)
    words = re.findall(r"[a-z]+", s)
    for i, w in enumerate(words):
        negated = i > 0 and words[i - 1] == "not"
        if w in YES:
            return "no" if negated else "yes"
        if w in NO:
            return "yes" if negated else "no"
    return s


def correct(pred, golds, tabfact):
    canon = verdict if tabfact else normalize
    p = canon(pred)
    if not p:
        return False
    for g in golds:
        n = canon(g)
        if n and (n == p or multiset_equal(parts(p), parts(n))):
            return True
    return False


def bucket(calls):
    for label, top in (("<=5", 5), ("6-10", 10), ("11-20", 20), ("21-30", 30)):
        if calls <= top:
            return label
    return ">30"


def main():
    records = [json.loads(l)["record"] for l in open(sys.argv[1], encoding="utf-8") if l.strip()]
    examples = [json.loads(l) for l in open(sys.argv[2], encoding="utf-8") if l.strip()]
    if [r["id"] for r in records] != [e["id"] for e in examples]:
        sys.exit("record and example ids differ")

    right = subs = invalid = 0
    calls = []
    for r, e in zip(records, examples):
        final = r["final_answer"]
        if final is not None and correct(final["text"], e["answers"], e.get("task") == "tabfact"):
            right += 1
        subs += len(r["subquestions"])
        invalid += sum(1 for chain in r["chains"] if len(chain) == 0)
        calls.append(len(r["exchanges"]))

    n = len(records)
    ordered = sorted(calls)
    if not ordered:
        median = 0.0
    elif n % 2:
        median = float(ordered[n // 2])
    else:
        median = (ordered[n // 2 - 1] + ordered[n // 2]) / 2.0
    histogram = {label: 0 for label in ("<=5", "6-10", "11-20", "21-30", ">30")}
    for c in calls:
        histogram[bucket(c)] += 1
    print(json.dumps({
        "examples": n,
        "correct": right,
        "accuracy": right / n if n else 0.0,
        "subquestions": subs,
        "invalid_subquestions": invalid,
        "invalid_sql_rate": invalid / subs if subs else 0.0,
        "mean": sum(calls) / n if n else 0.0,
        "median": median,
        "max": max(calls) if calls else 0,
        "histogram": histogram,
    }))


if __name__ == "__main__":
    main()
