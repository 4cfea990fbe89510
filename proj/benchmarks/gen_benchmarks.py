#!/usr/bin/env python3
"""Regenerates the benchmark program documents in this directory."""
import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))


def block(bid, calls=None, uncond=None, cond=None, trigger=None):
    b = {"id": bid, "calls": calls or []}
    if cond is not None:
        b["branch"] = {"cond": cond}
    else:
        b["branch"] = {"uncond": uncond if uncond is not None else "return"}
    if trigger is not None:
        b["trigger"] = trigger
    return b


def cond(guard, then, els):
    return {"guard": guard, "then": then, "else": els}


def write(name, doc):
    path = os.path.join(HERE, name)
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")
    print("wrote", path)


# ---------------------------------------------------------------- figure1
# Client dispatches on a type byte; type==1 walks a long validation chain
# before the library call, type>=2 takes the short route. The library decodes
# on the long route and the vulnerable block is gated on type==1 with the
# trigger condition num==5.
def figure1():
    chain = [block(f"d{i:02d}", uncond=f"d{i + 1:02d}") for i in range(1, 20)]
    chain.append(block("d20", uncond="db"))
    return {
        "name": "figure1",
        "entry": "main",
        "functions": [
            {
                "name": "main",
                "owner": "client",
                "blocks": [
                    block("b0", cond=cond({"len_ge": [2]}, "b1", "return")),
                    block("b1", cond=cond({"byte_ge": [0, 1]}, "b2", "b3")),
                    block("b2", calls=["dispatch"]),
                    block("b3"),
                ],
            },
            {
                "name": "dispatch",
                "owner": "client",
                "blocks": [
                    block("b0", cond=cond({"byte_eq": [0, 1]}, "d01", "ds")),
                    *chain,
                    block("ds", uncond="db"),
                    block("db", calls=["api"]),
                ],
            },
            {
                "name": "api",
                "owner": "library",
                "blocks": [
                    block("b0", cond=cond({"byte_eq": [0, 1]}, "b1", "b2")),
                    block("b1", calls=["decode"], uncond="b3"),
                    block("b2", uncond="b3"),
                    block("b3", calls=["vuln"]),
                ],
            },
            {
                "name": "decode",
                "owner": "library",
                "blocks": [
                    block("b0", uncond="b1"),
                    block("b1", uncond="b2"),
                    block("b2"),
                ],
            },
            {
                "name": "vuln",
                "owner": "library",
                "blocks": [
                    block("b0", cond=cond({"byte_eq": [0, 1]}, "b1", "return")),
                    block("b1", trigger={"cve": "CVE-FIG1", "condition": {"byte_eq": [1, 5]}}),
                ],
            },
        ],
    }


FIGURE1_TARGETS = {
    "vulnerable": [{"function": "vuln", "cve": "CVE-FIG1", "weight": 8.6}],
    "key_functions": [{"function": "decode", "cves": ["CVE-FIG1"]}],
}


# ---------------------------------------------------------------- twopath
# A client-only decoy tree rich in coverage novelty, and a library with two
# routes to the vulnerable function: a long route gated by three sequential
# byte-equality guards (each pass is visible as new coverage) and a short
# route gated by a single three-byte conjunction that offers no intermediate
# feedback. Average-distance scheduling keeps favoring the sterile short
# route; path-relative risk switches to the long route as it deepens.
def decoy_tree(prefix, byte_off, depth, leaf_target):
    blocks = []

    def rec(node, lo, hi, level):
        bid = f"{prefix}{node}"
        if level == depth:
            blocks.append(block(bid, uncond=leaf_target))
            return bid
        mid = (lo + hi + 1) // 2
        left = rec(node * 2 + 1, lo, mid - 1, level + 1)
        right = rec(node * 2 + 2, mid, hi, level + 1)
        blocks.append(block(bid, cond=cond({"byte_ge": [byte_off, mid]}, right, left)))
        return bid

    root = rec(0, 0, 255, 0)
    return blocks, root


def twopath():
    t_blocks, t_root = decoy_tree("t", 1, 4, "u0")
    u_blocks, u_root = decoy_tree("u", 2, 4, "return")
    assert u_root == "u0"
    # One-shot conjunction over bytes the long route never reads: no partial
    # feedback, negligible odds of a blind hit.
    short_gate = {
        "and": [
            {"byte_eq": [5, 171]},
            {"and": [{"byte_eq": [6, 205]}, {"byte_eq": [7, 239]}]},
        ]
    }
    return {
        "name": "twopath",
        "entry": "main",
        "functions": [
            {
                "name": "main",
                "owner": "client",
                "blocks": [
                    block("b0", cond=cond({"len_ge": [8]}, "b1", "return")),
                    block("b1", cond=cond({"byte_ge": [0, 128]}, "b2", "b3")),
                    block("b2", calls=["decoy"]),
                    block("b3", calls=["handle"]),
                ],
            },
            {
                "name": "decoy",
                "owner": "client",
                "blocks": [block("b0", uncond=t_root)] + t_blocks + u_blocks,
            },
            {
                "name": "handle",
                "owner": "client",
                "blocks": [block("b0", calls=["api"])],
            },
            {
                "name": "api",
                "owner": "library",
                "blocks": [
                    # byte0 < 64 takes the long gated route, 64..127 the short one
                    block("b0", cond=cond({"byte_le": [0, 63]}, "l1", "s1")),
                    block("s1", cond=cond(short_gate, "s2", "sr")),
                    block("s2", calls=["vuln"]),
                    block("sr"),
                    # long route: three separated byte-equality gates
                    block("l1", cond=cond({"byte_eq": [1, 18]}, "l2", "lr0")),
                    block("lr0"),
                    block("l2", calls=["deep_parse"], uncond="l3"),
                    block("l3", uncond="l4"),
                    block("l4", cond=cond({"byte_eq": [2, 52]}, "l5", "lr1")),
                    block("lr1"),
                    block("l5", uncond="l6"),
                    block("l6", uncond="l7"),
                    block("l7", cond=cond({"byte_eq": [3, 86]}, "l8", "lr2")),
                    block("lr2"),
                    block("l8", uncond="l9"),
                    block("l9", calls=["vuln"]),
                ],
            },
            {
                "name": "deep_parse",
                "owner": "library",
                "blocks": [block("b0", uncond="b1"), block("b1")],
            },
            {
                "name": "vuln",
                "owner": "library",
                "blocks": [
                    block("b0", trigger={"cve": "CVE-TP", "condition": {"len_ge": [1]}}),
                ],
            },
        ],
    }


TWOPATH_TARGETS = {
    "vulnerable": [{"function": "vuln", "cve": "CVE-TP", "weight": 9.8}],
    "key_functions": [{"function": "deep_parse", "cves": ["CVE-TP"]}],
}


# ---------------------------------------------------------------- fourpath
# Exactly four satisfiable routes to the vulnerable function (one per byte-0
# quartile) plus one statically present but unsatisfiable route.
def fourpath():
    return {
        "name": "fourpath",
        "entry": "main",
        "functions": [
            {
                "name": "main",
                "owner": "client",
                "blocks": [
                    block("b0", cond=cond({"len_ge": [2]}, "b1", "return")),
                    block("b1", calls=["api"]),
                ],
            },
            {
                "name": "api",
                "owner": "library",
                "blocks": [
                    block("b0", cond=cond({"byte_le": [0, 127]}, "n1", "n2")),
                    block("n1", cond=cond({"byte_le": [0, 63]}, "p1", "p2")),
                    block(
                        "n2",
                        cond=cond(
                            {"and": [{"byte_ge": [0, 192]}, {"byte_le": [0, 100]}]},
                            "dead",
                            "n3",
                        ),
                    ),
                    block("n3", cond=cond({"byte_le": [0, 191]}, "p3", "p4")),
                    block("p1", calls=["vuln"]),
                    block("p2", calls=["vuln"]),
                    block("p3", calls=["vuln"]),
                    block("p4", calls=["vuln"]),
                    block("dead", calls=["vuln"]),
                ],
            },
            {
                "name": "vuln",
                "owner": "library",
                "blocks": [
                    block("b0", trigger={"cve": "CVE-4P", "condition": {"byte_eq": [1, 90]}}),
                ],
            },
        ],
    }


FOURPATH_TARGETS = {
    "vulnerable": [{"function": "vuln", "cve": "CVE-4P", "weight": 5.0}]
}

SUITE = {
    "runs": 5,
    "rng_seed_base": 1,
    "modes": ["livefuzz", "aflgo", "coverage"],
    "cases": [
        {
            "name": "twopath",
            "program": "twopath.json",
            "targets": "twopath.targets.json",
            "budget_execs": 5000000,
            "step_budget": 512,
            "t_x_sim": 200000,
            "seeds": ["00000000"],
        },
        {
            "name": "figure1",
            "program": "figure1.json",
            "targets": "figure1.targets.json",
            "budget_execs": 2000000,
            "step_budget": 512,
            "t_x_sim": 100000,
            "seeds": ["0000"],
        },
    ],
}

if __name__ == "__main__":
    write("figure1.json", figure1())
    write("figure1.targets.json", FIGURE1_TARGETS)
    write("twopath.json", twopath())
    write("twopath.targets.json", TWOPATH_TARGETS)
    write("fourpath.json", fourpath())
    write("fourpath.targets.json", FOURPATH_TARGETS)
    write("suite.json", SUITE)
