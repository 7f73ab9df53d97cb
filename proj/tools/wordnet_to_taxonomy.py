#!/usr/bin/env python3
"""Convert WordNet database files (data.noun, data.adj) into a taxonomy JSON document.

Nouns keep their hypernym DAG (regular and instance hypernyms). Adjectives have
no hypernym hierarchy in WordNet; each head synset is hung under a synthetic
`adjective` node below the noun root and its satellites (similar-to cluster)
below the head.

Usage: wordnet_to_taxonomy.py <wordnet-dict-dir> <out.json>
"""
import json
import sys
from pathlib import Path


def parse_data_file(path):
    for line in Path(path).read_text(encoding="latin-1").splitlines():
        if not line or line.startswith(" "):
            continue
        head = line.split(" | ", 1)[0].split()
        offset, _lexfile, ss_type = head[0], head[1], head[2]
        w_cnt = int(head[3], 16)
        words = [head[4 + 2 * i].lower() for i in range(w_cnt)]
        pos = 4 + 2 * w_cnt
        p_cnt = int(head[pos])
        pos += 1
        ptrs = []
        for _ in range(p_cnt):
            ptrs.append((head[pos], head[pos + 1], head[pos + 2]))
            pos += 4
        yield offset, ss_type, words, ptrs


def sense_order(path):
    """lemma -> synset offsets in WordNet sense-number order."""
    order = {}
    for line in Path(path).read_text(encoding="latin-1").splitlines():
        if not line or line.startswith(" "):
            continue
        f = line.split()
        lemma, p_cnt = f[0], int(f[3])
        synset_cnt = int(f[2])
        order[lemma] = f[6 + p_cnt: 6 + p_cnt + synset_cnt]
    return order


def node_id(words, pos, offset):
    return f"{words[0]}.{pos}.{offset}"


def main(argv):
    if len(argv) != 3:
        print(__doc__, file=sys.stderr)
        return 2
    src, out = Path(argv[1]), Path(argv[2])
    nodes, lemmas = [], {}

    noun_ids, noun_entries = {}, []
    for offset, _t, words, ptrs in parse_data_file(src / "data.noun"):
        noun_ids[offset] = node_id(words, "n", offset)
        noun_entries.append((offset, words, ptrs))
    root = None
    for offset, words, ptrs in noun_entries:
        parents = sorted({noun_ids[t] for sym, t, p in ptrs if sym in ("@", "@i") and p == "n"})
        if not parents:
            if root is not None:
                raise SystemExit(f"second noun root: {noun_ids[offset]}")
            root = noun_ids[offset]
        nodes.append({"id": noun_ids[offset], "parents": parents})

    adj_root = "adjective.synthetic"
    nodes.append({"id": adj_root, "parents": [root]})
    adj_ids, adj_entries = {}, []
    for offset, ss_type, words, ptrs in parse_data_file(src / "data.adj"):
        # strip syntactic markers such as "(a)" / "(p)"
        words = [w.split("(")[0] for w in words]
        adj_ids[offset] = node_id(words, "a", offset)
        adj_entries.append((offset, ss_type, words, ptrs))
    for offset, ss_type, words, ptrs in adj_entries:
        if ss_type == "s":
            heads = sorted({adj_ids[t] for sym, t, p in ptrs if sym == "&" and p in ("a", "s")})
            parents = heads or [adj_root]
        else:
            parents = [adj_root]
        nodes.append({"id": adj_ids[offset], "parents": parents})

    for pos, ids, index in (("noun", noun_ids, "index.noun"), ("adjective", adj_ids, "index.adj")):
        for lemma, offsets in sense_order(src / index).items():
            if "_" in lemma:
                continue
            lemmas[(lemma, pos)] = [ids[o] for o in offsets]

    doc = {
        "nodes": nodes,
        "lemmas": [{"word": w, "pos": p, "senses": s} for (w, p), s in sorted(lemmas.items())],
    }
    out.write_text(json.dumps(doc))
    print(f"{len(nodes)} nodes, {len(doc['lemmas'])} lemmas, root {root}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
