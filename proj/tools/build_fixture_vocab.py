#!/usr/bin/env python3
"""Train the small byte-level BPE fixture vocabulary shipped in data/.

The 256 single-byte tokens come first, in the printable-first order used by
GPT-style byte-level vocabularies (so token 0 is "!"); learned merges follow.
The corpus is a fixed word list, so the output is reproducible.

Usage: build_fixture_vocab.py <out.json> [merge_count]
"""
import base64
import collections
import json
import sys

CORPUS = """
a car in the shape of a wing. a fast car in the shape of a wing.
the sleek slender car, the boxy truck, the round bubble, the thin needle.
wing fin blade arrow dart spear needle tube pipe rod rocket bullet torpedo
box crate brick cube house barn tower bridge cloud smoke fog bubble ball
snake frog fish eel shark bird eagle penguin dog whale elephant horse
fast quick rapid speedy slow sluggish sleek slender thin narrow wide broad
bulky boxy heavy tall low flat round curved big huge small tiny compact
aerodynamic streamlined smooth sharp pointed blunt flat square
red blue green black white silver golden shiny matte
sports car compact car racing car family car electric car vintage car
the quick brown fox jumps over the lazy dog
shape of the wind, shape of water, shape of speed, shape of a dream
"""


def byte_order():
    printable = list(range(ord("!"), ord("~") + 1)) + list(range(0xA1, 0xAD)) + list(range(0xAE, 0x100))
    return printable + [b for b in range(256) if b not in printable]


def train(merge_count):
    tokens = [bytes([b]) for b in byte_order()]
    words = collections.Counter()
    for w in CORPUS.split():
        words[(" " + w).encode()] += 1
        words[w.encode()] += 1
    seqs = {w: [bytes([b]) for b in w] for w in words}
    merges = []
    for _ in range(merge_count):
        pairs = collections.Counter()
        for w, seq in seqs.items():
            for a, b in zip(seq, seq[1:]):
                pairs[(a, b)] += words[w]
        if not pairs:
            break
        # Highest count, ties broken by byte order for reproducibility.
        (a, b), _ = min(pairs.items(), key=lambda kv: (-kv[1], kv[0]))
        merges.append((a, b))
        tokens.append(a + b)
        for w, seq in seqs.items():
            out, i = [], 0
            while i < len(seq):
                if i + 1 < len(seq) and seq[i] == a and seq[i + 1] == b:
                    out.append(a + b)
                    i += 2
                else:
                    out.append(seq[i])
                    i += 1
            seqs[w] = out
    return tokens, merges


def main(argv):
    if len(argv) < 2:
        print(__doc__, file=sys.stderr)
        return 2
    merge_count = int(argv[2]) if len(argv) > 2 else 256
    tokens, merges = train(merge_count)
    b64 = lambda b: base64.b64encode(b).decode()
    doc = {
        "vocab_size": len(tokens),
        "tokens": [b64(t) for t in tokens],
        "merges": [[b64(a), b64(b)] for a, b in merges],
    }
    with open(argv[1], "w") as f:
        json.dump(doc, f, indent=0)
        f.write("\n")
    print(f"{len(tokens)} tokens, {len(merges)} merges")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
