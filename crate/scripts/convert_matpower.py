#!/usr/bin/env python3
"""Convert the PYPOWER copies of the MATPOWER case14/case30/case57 tables into
gridrisk case documents, and freeze PYPOWER power-flow results as reference
data for the core crate's cross-check tests.

Usage: python3 scripts/convert_matpower.py   (requires `pip install pypower`)
"""
import math
import os

import numpy as np
from pypower.api import case14, case30, case57, ppoption, runpf

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..")
CASES = os.path.join(ROOT, "crates", "core", "cases")
REFS = os.path.join(ROOT, "crates", "core", "tests", "data")

KIND = {3: "slack", 2: "pv", 1: "pq"}
GROUP_STYLES = ["constant", "smooth", "abrupt"]

# Bus-tie switches for the node-breaker layer, placed across short branches.
SWITCHES = {
    "case30": [(1, 3, 4), (2, 21, 22), (3, 19, 20), (4, 6, 8)],
}


def fmt(x):
    x = float(x)
    if x == 0.0:
        return "0.0"
    return repr(round(x, 12))


def group_of(name, bus_row, bus_ids):
    if name == "case30":
        return int(bus_row[6]) - 1
    # No area data: partition by bus-id tercile.
    rank = sorted(bus_ids).index(int(bus_row[0]))
    return min(2, 3 * rank // len(bus_ids))


def convert(name, ppc):
    base = float(ppc["baseMVA"])
    out = [f"# {name}: MATPOWER {name} converted to per-unit on base_mva", f"base_mva = {fmt(base)}", ""]
    bus_ids = [int(b[0]) for b in ppc["bus"]]
    out.append("bus = [")
    for b in ppc["bus"]:
        out.append(
            "  { "
            + f"id = {int(b[0])}, kind = \"{KIND[int(b[1])]}\", vm = {fmt(b[7])}, va = {fmt(math.radians(b[8]))}, "
            + f"v_min = {fmt(b[12])}, v_max = {fmt(b[11])}, gs = {fmt(b[4] / base)}, bs = {fmt(b[5] / base)}"
            + " },"
        )
    out.append("]\n")
    out.append("branch = [")
    for i, br in enumerate(ppc["branch"]):
        tap = br[8] if br[8] != 0 else 1.0
        status = "closed" if br[10] > 0 else "open"
        out.append(
            "  { "
            + f"id = {i + 1}, from_bus = {int(br[0])}, to_bus = {int(br[1])}, r = {fmt(br[2])}, x = {fmt(br[3])}, "
            + f"b = {fmt(br[4])}, tap = {fmt(tap)}, shift = {fmt(math.radians(br[9]))}, rate_a = {fmt(br[5] / base)}, "
            + f"status = \"{status}\""
            + " },"
        )
    out.append("]\n")
    out.append("generator = [")
    for i, (g, c) in enumerate(zip(ppc["gen"], ppc["gencost"])):
        assert int(c[0]) == 2 and int(c[3]) == 3
        c2, c1, c0 = c[4] * base * base, c[5] * base, c[6]
        status = "on" if g[7] > 0 else "off"
        out.append(
            "  { "
            + f"id = {i + 1}, bus = {int(g[0])}, pg = {fmt(g[1] / base)}, qg = {fmt(g[2] / base)}, "
            + f"p_min = {fmt(g[9] / base)}, p_max = {fmt(g[8] / base)}, q_min = {fmt(g[4] / base)}, q_max = {fmt(g[3] / base)}, "
            + f"v_set = {fmt(g[5])}, status = \"{status}\", cost_c2 = {fmt(c2)}, cost_c1 = {fmt(c1)}, cost_c0 = {fmt(c0)}"
            + " },"
        )
    out.append("]\n")
    out.append("load = [")
    lid = 0
    for b in ppc["bus"]:
        if b[2] == 0 and b[3] == 0:
            continue
        lid += 1
        grp = group_of(name, b, bus_ids)
        out.append(
            "  { "
            + f"id = {lid}, bus = {int(b[0])}, pd = {fmt(b[2] / base)}, qd = {fmt(b[3] / base)}, "
            + f"group = {grp}, style = \"{GROUP_STYLES[grp]}\""
            + " },"
        )
    out.append("]\n")
    sw = SWITCHES.get(name, [])
    if sw:
        out.append("switch = [")
        for sid, a, bb in sw:
            out.append(f"  {{ id = {sid}, bus_a = {a}, bus_b = {bb}, status = \"open\" }},")
        out.append("]\n")
    with open(os.path.join(CASES, f"{name}.toml"), "w") as f:
        f.write("\n".join(out))


def reference(name, ppc):
    res, ok = runpf(ppc, ppoption(VERBOSE=0, OUT_ALL=0, PF_TOL=1e-10))
    assert ok
    base = float(ppc["baseMVA"])
    with open(os.path.join(REFS, f"{name}_pypower.csv"), "w") as f:
        f.write("bus,vm,va\n")
        for b in res["bus"]:
            f.write(f"{int(b[0])},{float(b[7])!r},{math.radians(b[8])!r}\n")
    losses = (res["gen"][:, 1].sum() - res["bus"][:, 2].sum()) / base
    with open(os.path.join(REFS, f"{name}_pypower_losses.txt"), "w") as f:
        f.write(f"{float(losses)!r}\n")


if __name__ == "__main__":
    os.makedirs(CASES, exist_ok=True)
    os.makedirs(REFS, exist_ok=True)
    for name, fn in (("case14", case14), ("case30", case30), ("case57", case57)):
        convert(name, fn())
        reference(name, fn())
        print("wrote", name)
