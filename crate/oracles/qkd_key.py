"""Term-by-term recomputation of the finite-size E91 key length (mpmath, 30 digits)."""
from mpmath import mp, mpf, log, sqrt, ceil

mp.dps = 30


def h2(x):
    x = mpf(x)
    return -x * log(x, 2) - (1 - x) * log(1 - x, 2)


def key(n, mu, e, theta, eps, p):
    n, mu, e, theta, eps, p = map(mpf, (n, mu, e, theta, eps, p))
    m2 = mu * mu
    h = 1 - 2 * mu + m2 - h2(e)
    slope = -log((1 - e) / e, 2) / m2          # d f / d q(1) on the slice
    grad = abs(slope) / 2                        # half spread of the tangent's vertex values
    eps4 = eps / 4
    rad = sqrt(1 - 2 * log(eps4 * p, 2))
    c = 2 * (log(1 + 2 * 9, 2) + ceil(grad - mpf("1e-12"))) * rad
    eat = n * h - c * sqrt(n)
    cmax = 2 * log(1 + 2 * 3, 2) * rad
    hmax = m2 * n + cmax * sqrt(n)
    raw = eat - hmax - n * theta - log(8 / eps**2, 2) - (2 * log(1 / eps, 2) + 2)
    return dict(h=h, grad=grad, c=c, eat=eat, hmax=hmax, raw=raw)


if __name__ == "__main__":
    for n in (10**6, 10**8, 10**10, 10**12):
        r = key(n, "0.05", "0.05", "0.2", "1e-6", "0.5")
        print(n, {k: mp.nstr(v, 17) for k, v in r.items()})
    r = key(10**8, "0.01", "0.05", "0.2", "1e-6", "0.5")
    print("crit5", {k: mp.nstr(v, 17) for k, v in r.items()}, "rate", mp.nstr(r["raw"] / 10**8, 10))
    thr = 1 - h2("0.05") - mpf("0.2") - mpf("0.02")
    print("threshold", mp.nstr(thr, 17))
    for n in (10**14, 10**16, 10**18):
        r = key(n, "0.01", "0.05", "0.2", "1e-6", "0.5")
        print(n, "rate", mp.nstr(r["raw"] / n, 10), "gap", mp.nstr(thr - r["raw"] / n, 6))


def key_opt(n, mu, e, theta, eps, p):
    """Best key over tangent points e' >= e: one candidate per integer value G of the
    ceiled gradient, at the smallest e' whose gradient is at most G."""
    n, mu, e, theta, eps, p = map(mpf, (n, mu, e, theta, eps, p))
    m2 = mu * mu
    base = 1 - 2 * mu + m2
    eps4 = eps / 4
    rad = sqrt(1 - 2 * log(eps4 * p, 2))
    cmax = 2 * log(1 + 2 * 3, 2) * rad
    hmax = m2 * n + cmax * sqrt(n)
    rest = hmax + n * theta + log(8 / eps**2, 2) + (2 * log(1 / eps, 2) + 2)
    g0 = log((1 - e) / e, 2) / m2 / 2
    best = None
    for G in range(int(ceil(g0 - mpf("1e-12"))), -1, -1):
        ep = max(e, 1 / (1 + mpf(2) ** (2 * m2 * G)))
        g = log((1 - ep) / ep, 2) / m2 / 2
        h = base - h2(ep) - (e - ep) * log((1 - ep) / ep, 2)
        c = 2 * (log(1 + 2 * 9, 2) + ceil(g - mpf("1e-12"))) * rad
        raw = n * h - c * sqrt(n) - rest
        if best is None or raw > best["raw"]:
            best = dict(tangent_e=ep, h=h, grad=g, c=c, raw=raw)
    return best


if __name__ == "__main__":
    print("optimized tangent point")
    for n in (10**6, 10**8, 10**10):
        r = key_opt(n, "0.05", "0.05", "0.2", "1e-6", "0.5")
        print(n, {k: mp.nstr(v, 17) for k, v in r.items()})
    r = key_opt(10**8, "0.01", "0.05", "0.2", "1e-6", "0.5")
    print("crit5", {k: mp.nstr(v, 17) for k, v in r.items()}, "rate", mp.nstr(r["raw"] / 10**8, 10))
    for n in (10**14, 10**15, 10**16):
        r = key_opt(n, "0.01", "0.05", "0.2", "1e-6", "0.5")
        print(n, "rate", mp.nstr(r["raw"] / n, 10), "gap", mp.nstr(thr - r["raw"] / n, 6), "e'", mp.nstr(r["tangent_e"], 8))
