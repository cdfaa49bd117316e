#!/usr/bin/env python3
"""Builds awl_sublist1_gold.txt, the morphology oracle for AWL sublist 1.

Inflected forms come from LemmInflect (pip install lemminflect). Its raw
output carries known tagging defects, so the applicable tags are curated by
hand below and the following corrections are applied:

  * Latin plurals (-ae, -ae ligature, -i) are dropped when a regular plural
    exists.
  * The singular form never appears under NNS.
  * Uncountable nouns carry NN only.
  * A few misspelled or missing forms are overridden (see OVERRIDES).
  * VBN is kept only when it differs from VBD (LemmInflect omits it
    otherwise, and so does the engine).

The script is run once by hand; its output is checked in and is not
regenerated during the build.

Output format, one headword per line:
  headword<TAB>TAG=form|form<TAB>TAG=form ...
with tags in canonical order and forms sorted.
"""

import sys

from lemminflect import getAllInflections

VERB = ["VB", "VBD", "VBG", "VBN", "VBP", "VBZ"]
NOUN = ["NN", "NNS"]
NOUN_UNCOUNTABLE = ["NN"]
ADJ = ["JJ"]

CURATED = {
    # verbs only
    **{w: VERB for w in [
        "analyse", "assess", "assume", "consist", "constitute", "create",
        "define", "derive", "distribute", "establish", "identify",
        "indicate", "interpret", "involve", "legislate", "occur", "proceed",
        "require", "respond", "vary"]},
    # noun and verb
    **{w: NOUN + VERB for w in [
        "approach", "benefit", "contract", "estimate", "export", "factor",
        "finance", "function", "issue", "labour", "process", "section",
        "source", "structure"]},
    "research": NOUN_UNCOUNTABLE + VERB,
    "major": ADJ + NOUN + VERB,
    # countable nouns
    **{w: NOUN for w in [
        "area", "authority", "concept", "context", "economy", "environment",
        "formula", "income", "method", "period", "policy", "principle",
        "role", "sector", "theory"]},
    "individual": ADJ + NOUN,
    # uncountable nouns
    "data": NOUN_UNCOUNTABLE,
    "percent": NOUN_UNCOUNTABLE,
    # adjectives
    **{w: ADJ for w in [
        "available", "evident", "legal", "significant", "similar",
        "specific"]},
}

# Corrections to LemmInflect's raw forms: misspelled variants and a plural
# it only reports as the singular.
OVERRIDES = {
    ("occur", "VBD"): {"occurred"},
    ("occur", "VBG"): {"occurring"},
    ("finance", "NNS"): {"finances"},
}

ORDER = ["NN", "NNS", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ",
         "JJ", "JJR", "JJS", "RB", "RBR", "RBS"]


def latin_plural(form, headword):
    return form.endswith("ae") or form.endswith("æ") or (
        form.endswith("i") and not headword.endswith("i"))


def forms_for(headword, tag, raw):
    if (headword, tag) in OVERRIDES:
        return OVERRIDES[(headword, tag)]
    if tag == "NN" or tag == "VB" or tag == "VBP" or tag == "JJ":
        return {headword}
    if tag == "VBN":
        vbd = set(raw.get("VBD", ()))
        vbn = set(raw.get("VBN", ())) - vbd
        return vbn
    forms = set(raw.get(tag, ()))
    if tag == "NNS":
        forms.discard(headword)
        regular = {f for f in forms if not latin_plural(f, headword)}
        forms = regular or forms
    return forms


def main(path):
    words = [line.split(",")[0] for line in open(path, encoding="utf-8")][1:]
    assert len(words) == 60, len(words)
    out = []
    for w in words:
        raw = {k: v for k, v in getAllInflections(w).items()}
        fields = [w]
        for tag in ORDER:
            if tag not in CURATED[w]:
                continue
            forms = forms_for(w, tag, raw)
            if not forms:
                continue
            fields.append(tag + "=" + "|".join(sorted(forms)))
        out.append("\t".join(fields))
    sys.stdout.write("\n".join(out) + "\n")


if __name__ == "__main__":
    main(sys.argv[1])
