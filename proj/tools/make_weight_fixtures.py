#!/usr/bin/env python3
"""Regenerates the seeded weight fixtures under fixtures/weights/."""

import argparse
import json
from pathlib import Path

import numpy as np

VERSION = "riskplan.weights/1"


def arr(a):
    a = np.asarray(a, dtype=float)
    return {"shape": list(a.shape), "data": [float(v) for v in a.ravel()]}


def embedding(rng, dim):
    return {
        "embed.agent_proj": arr(rng.normal(0.0, 0.3, (6, dim))),
        "embed.agent_bias": arr(rng.normal(0.0, 0.1, dim)),
        "embed.plan_proj": arr(rng.normal(0.0, 0.3, (4, dim))),
        "embed.plan_bias": arr(rng.normal(0.0, 0.1, dim)),
        "embed.ego_proj": arr(rng.normal(0.0, 0.3, (3, dim))),
        "embed.ego_bias": arr(rng.normal(0.0, 0.1, dim)),
    }


def attention(rng, dim, d_k, hidden):
    s = 1.0 / np.sqrt(dim)
    arrays = embedding(rng, dim)
    arrays.update({
        "attn.w_q": arr(rng.normal(0.0, s, (dim, d_k))),
        "attn.w_k": arr(rng.normal(0.0, s, (dim, d_k))),
        "attn.w_v": arr(rng.normal(0.0, s, (dim, d_k))),
        "attn.ffn.w1": arr(rng.normal(0.0, 1.0 / np.sqrt(d_k), (d_k, hidden))),
        "attn.ffn.b1": arr(np.zeros(hidden)),
        "attn.ffn.w2": arr(rng.normal(0.0, 1.0 / np.sqrt(hidden), (hidden, d_k))),
        "attn.ffn.b2": arr(np.zeros(d_k)),
        "attn.norm.scale": arr(np.ones(d_k)),
        "attn.norm.shift": arr(np.zeros(d_k)),
    })
    return {
        "version": VERSION,
        "arrays": arrays,
        "scalars": {"attn.norm.eps": 1e-5, "attn.beta": 2.0},
        "labels": {"attn.ffn.activation": "relu"},
    }


def spa(rng, dim, horizon):
    s = 1.0 / np.sqrt(dim)
    arrays = embedding(rng, dim)
    arrays.update({
        "spa.template_proj": arr(rng.normal(0.0, 0.05, (2 * horizon, dim))),
        "spa.template_bias": arr(np.zeros(dim)),
        "spa.decoder": arr(rng.normal(0.0, 0.01, (dim, 2 * horizon))),
        "spa.decoder_bias": arr(np.zeros(2 * horizon)),
    })
    for name in ("ctx_q", "ctx_k", "ctx_v", "cross_q", "cross_k", "cross_v"):
        arrays["spa." + name] = arr(rng.normal(0.0, s, (dim, dim)))
    return {"version": VERSION, "arrays": arrays, "scalars": {}, "labels": {}}


def rta(rng, dim):
    s = 1.0 / np.sqrt(dim)
    arrays = {
        "rta.w_q": arr(rng.normal(0.0, s, (dim, dim))),
        "rta.w_k": arr(rng.normal(0.0, s, (dim, dim))),
        "rta.w_v": arr(rng.normal(0.0, s, (dim, dim))),
        "rta.gate_bias": arr(np.zeros(dim)),
        "rta.w_mod": arr(rng.normal(0.0, s, (dim, dim))),
        "rta.b_mod": arr(np.zeros(dim)),
    }
    return {"version": VERSION, "arrays": arrays, "scalars": {}, "labels": {"rta.mod_activation": "tanh"}}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "fixtures" / "weights")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    files = {
        "attention.json": attention(rng, 16, 16, 32),
        "spa_t6.json": spa(rng, 16, 6),
        "rta.json": rta(rng, 16),
    }
    for name, doc in files.items():
        (args.out / name).write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main()
