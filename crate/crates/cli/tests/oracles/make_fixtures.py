"""Writes the CLI test fixtures and their golden values.

Each golden value is computed here from scratch (path enumeration, Kalman
recursion, weighted least squares) without touching the Rust code.
Run from this directory: python3 make_fixtures.py
"""

import itertools
import json
import math
import os
import random

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "fixtures")


def log_npdf(x, m, v):
    return -0.5 * (math.log(2 * math.pi * v) + (x - m) ** 2 / v)


def write_csv(name, xs):
    with open(os.path.join(OUT, name), "w") as f:
        f.write("xi_0\n")
        for x in xs:
            f.write(repr(x) + "\n")


def write_json(name, obj):
    with open(os.path.join(OUT, name), "w") as f:
        json.dump(obj, f, indent=2)
        f.write("\n")


def msar():
    p = dict(p11=0.85, p21=0.3, phi1=0.4, mu1=-1.0, mu2=1.5, sigma2=0.8)
    rng = random.Random(11)
    P = [[p["p11"], 1 - p["p11"]], [p["p21"], 1 - p["p21"]]]
    mu = [p["mu1"], p["mu2"]]
    pi1 = p["p21"] / (1 - p["p11"] + p["p21"])
    pi = [pi1, 1 - pi1]
    # data: simulate the regime chain and AR errors
    r = 0 if rng.random() < pi[0] else 1
    s = [rng.gauss(mu[r], math.sqrt(p["sigma2"] / (1 - p["phi1"] ** 2)))]
    regimes = [r]
    for _ in range(7):
        nr = 0 if rng.random() < P[r][0] else 1
        s.append(mu[nr] + p["phi1"] * (s[-1] - mu[r]) + rng.gauss(0, math.sqrt(p["sigma2"])))
        r = nr
        regimes.append(r)
    total = 0.0
    for path in itertools.product([0, 1], repeat=len(s)):
        w = pi[path[0]] * math.exp(log_npdf(s[0], mu[path[0]], p["sigma2"] / (1 - p["phi1"] ** 2)))
        for k in range(1, len(s)):
            m = mu[path[k]] + p["phi1"] * (s[k - 1] - mu[path[k - 1]])
            w *= P[path[k - 1]][path[k]] * math.exp(log_npdf(s[k], m, p["sigma2"]))
        total += w
    write_csv("msar.csv", s)
    write_json("msar.json", {"model": {"family": "msar", "spec": p}, "grid": "auto", "data": "msar.csv"})
    return math.log(total)


def lingauss():
    p = dict(alpha=0.8, sigma_eta2=1.0, sigma_eps2=1.0)
    rng = random.Random(12)
    v = p["sigma_eta2"] / (1 - p["alpha"] ** 2)
    x = rng.gauss(0, math.sqrt(v))
    s = []
    for k in range(200):
        if k > 0:
            x = p["alpha"] * x + rng.gauss(0, math.sqrt(p["sigma_eta2"]))
        s.append(x + rng.gauss(0, math.sqrt(p["sigma_eps2"])))
    m, P, ll = 0.0, v, 0.0
    for k, y in enumerate(s):
        if k > 0:
            m, P = p["alpha"] * m, p["alpha"] ** 2 * P + p["sigma_eta2"]
        F = P + p["sigma_eps2"]
        ll += log_npdf(y, m, F)
        K = P / F
        m, P = m + K * (y - m), (1 - K) * P
    write_csv("lingauss.csv", s)
    write_json("lingauss.json", {"model": {"family": "lingauss", "spec": p}, "grid": "auto", "data": "lingauss.csv"})
    return ll


def ararch():
    p = dict(alpha0=1.0, alpha1=0.3, beta0=0.2, beta1=0.5)
    rng = random.Random(13)
    x = [0.0]
    for _ in range(3000):
        prev = x[-1]
        x.append(p["beta0"] + p["beta1"] * prev + rng.gauss(0, math.sqrt(p["alpha0"] + p["alpha1"] * prev * prev)))
    num = den = 0.0
    for k in range(1, len(x)):
        v = p["alpha0"] + p["alpha1"] * x[k - 1] ** 2
        num += (x[k] - p["beta0"]) * x[k - 1] / v
        den += x[k - 1] ** 2 / v
    write_csv("ararch.csv", x)
    start = dict(p, beta1=0.3)
    write_json(
        "ararch.json",
        {
            "model": {"family": "ararch", "spec": start},
            "grid": "auto",
            "data": "ararch.csv",
            "fit": {"free": ["beta1"], "tol_grad": 1e-10},
        },
    )
    return num / den


if __name__ == "__main__":
    golden = {"msar_loglik": msar(), "lingauss_loglik": lingauss(), "ararch_beta1": ararch()}
    write_json("golden.json", golden)
    print(json.dumps(golden, indent=2))
