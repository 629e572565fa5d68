"""Channel files, frontier CSV / witness JSON and the round-trip audit."""
from __future__ import annotations

import csv
import io
import json
from urllib.parse import parse_qs, urlparse

import numpy as np

from . import channels
from .degraded import degraded_rate_point, nocoop_rate_point
from .frontier import RateFrontier, polytope_vertex
from .general import MartonWitness, cutset_point, marton_coop_point
from .prob import BroadcastChannel

CSV_HEADER = ("lambda", "r1", "r2", "witness_id")
AUDIT_TOL = 1e-9


class ChannelParseError(ValueError):
    pass


def fmt(x):
    return "%.17g" % x


def _builtin(spec):
    u = urlparse(spec)
    name = u.path
    q = {k: v[-1] for k, v in parse_qs(u.query, keep_blank_values=True).items()}
    try:
        args = {k: float(v) for k, v in q.items()}
    except ValueError as e:
        raise ChannelParseError(f"bad parameter in {spec!r}: {e}") from None
    builders = {"bsbc": (channels.bsbc, ("p1", "p2")), "bsbc2": (channels.bsbc2, ("p",))}
    if name not in builders:
        raise ChannelParseError(f"unknown builtin channel {name!r}")
    make, required = builders[name]
    extra = set(args) - set(required) - {"c12", "c21"}
    if extra:
        raise ChannelParseError(f"unknown parameters {sorted(extra)} in {spec!r}")
    missing = [k for k in required if k not in args]
    if missing:
        raise ChannelParseError(f"{spec!r} is missing {missing}")
    return make(*(args[k] for k in required), c12=args.get("c12", 0.0),
                c21=args.get("c21", 0.0))


def channel_from_dict(d) -> BroadcastChannel:
    if not isinstance(d, dict):
        raise ChannelParseError("channel spec must be a JSON object")
    missing = [k for k in ("x_size", "y1_size", "y2_size", "transition") if k not in d]
    if missing:
        raise ChannelParseError(f"channel spec is missing {missing}")
    try:
        w = np.array(d["transition"], dtype=float)
    except (TypeError, ValueError) as e:
        raise ChannelParseError(f"transition is not a numeric [x][y1][y2] array: {e}") from None
    shape = (d["x_size"], d["y1_size"], d["y2_size"])
    if w.shape != tuple(shape):
        raise ChannelParseError(f"transition has shape {w.shape}, sizes say {tuple(shape)}")
    return BroadcastChannel(w, d.get("c12", 0.0), d.get("c21", 0.0), d.get("name", ""))


def channel_to_dict(ch: BroadcastChannel):
    return {"name": ch.name, "x_size": ch.nx, "y1_size": ch.ny1, "y2_size": ch.ny2,
            "transition": ch.w.tolist(), "c12": ch.c12, "c21": ch.c21}


def load_channel(path) -> BroadcastChannel:
    """Read a channel JSON file, or build one from ``builtin:<name>?<params>``."""
    if path.startswith("builtin:"):
        return _builtin(path[len("builtin:"):])
    try:
        with open(path) as f:
            d = json.load(f)
    except OSError as e:
        raise ChannelParseError(f"cannot read {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise ChannelParseError(f"{path}: invalid JSON: {e}") from None
    return channel_from_dict(d)


# ---------------------------------------------------------------------------
# frontiers
# ---------------------------------------------------------------------------

def frontier_csv(fr: RateFrontier) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for lam, r1, r2, wid in zip(fr.lambdas, fr.r1, fr.r2, fr.witness_ids):
        w.writerow([fmt(lam), fmt(r1), fmt(r2), int(wid)])
    return buf.getvalue()


def read_frontier_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ChannelParseError(f"frontier CSV must start with {','.join(CSV_HEADER)}")
    body = rows[1:]
    lam = np.array([float(r[0]) for r in body])
    r1 = np.array([float(r[1]) for r in body])
    r2 = np.array([float(r[2]) for r in body])
    wid = np.array([int(r[3]) for r in body], dtype=int)
    return lam, r1, r2, wid


def witness_json(fr: RateFrontier, ch: BroadcastChannel) -> str:
    doc = {
        "kind": fr.kind,
        "channel": channel_to_dict(ch),
        "witnesses": {str(i): {k: np.asarray(v).tolist() for k, v in w.items()}
                      for i, w in enumerate(fr.witnesses)},
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def witness_caps(kind, w, ch):
    """Exact-path (a, b, c) polytope of one witness."""
    if kind in ("degraded", "nocoop-degraded"):
        f = degraded_rate_point if kind == "degraded" else nocoop_rate_point
        pt = f(np.ravel(w["p_u"]), w["p_x_given_u"], ch)
        return pt.r1, pt.r02, np.inf
    if kind in ("marton", "marton-coop"):
        pt = marton_coop_point(MartonWitness(np.asarray(w["p_uvx"]), np.asarray(w["q_uhat"]),
                                             np.asarray(w["q_vhat"])), ch)
        return pt.r_u, pt.r_v, pt.sum_cap
    if kind == "cutset":
        return cutset_point(np.ravel(w["p_x"]), ch)
    raise ChannelParseError(f"cannot audit frontier kind {kind!r}")


def audit(csv_text, witness_text):
    """Re-evaluate every frontier row from its witness; returns (rows, max deviation)."""
    lam, r1, r2, wid = read_frontier_csv(csv_text)
    try:
        doc = json.loads(witness_text)
        ch = channel_from_dict(doc["channel"])
        kind, ws = doc["kind"], doc["witnesses"]
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise ChannelParseError(f"malformed witness file: {e}") from None
    dev = 0.0
    for l, a, b, i in zip(lam, r1, r2, wid):
        if i < 0:
            e1, e2 = 0.0, 0.0
        else:
            caps = witness_caps(kind, ws[str(i)], ch)
            _, e1, e2 = polytope_vertex(*caps, l)
        dev = max(dev, abs(float(e1) - a), abs(float(e2) - b))
    return len(lam), dev
