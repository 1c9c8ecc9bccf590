"""Independent re-derivation of the constants pinned in the C++ tests.

Evaluated in 50-digit arithmetic straight from the model formulas, without
touching the library. Run: python3 tests/oracles/golden.py
"""
from mpmath import mp, mpf, log, log10, ceil, sqrt

mp.dps = 50

C = mpf(299792458)
FC = mpf(7e9)
B = mpf(20e6)
H_BS, H_UT = mpf(25), mpf("1.8")
SLOT = mpf("1e-3")
P_UL_MAX, P_DL, P_DEC, P_LOC, P_IDLE = mpf("0.2"), mpf("0.3"), mpf("0.1"), mpf("0.5"), mpf("0.001")
F_LOC, F_DEC, F_EDGE, F_ENC = mpf(200e6), mpf(3e9), mpf(600e9), mpf(3e9)
GAIN_ANT = mpf(64 * 4)


def dbm_to_w(dbm):
    return mpf(10) ** ((dbm - 30) / 10)


def path_loss(d, fc=FC):
    d3 = sqrt(d * d + (H_BS - H_UT) ** 2)
    f = fc / mpf(1e9)
    d_bp = 4 * (H_BS - 1) * (H_UT - 1) * fc / C
    if d <= d_bp:
        los = 28 + 22 * log10(d3) + 20 * log10(f)
    else:
        los = 28 + 40 * log10(d3) + 20 * log10(f) - 9 * log10(d_bp ** 2 + (H_BS - H_UT) ** 2)
    nlos = mpf("13.54") + mpf("39.08") * log10(d3) + 20 * log10(f) - mpf("0.6") * (H_UT - mpf("1.5"))
    return max(los, nlos)


NOISE_DBM = -174 + 10 * log10(B) + 7
NOISE_W = dbm_to_w(NOISE_DBM)
P_BS = dbm_to_w(23 + 10 * log10(B / mpf(1e6)))


def rate(g, p):
    return B * log(1 + g * p / NOISE_W, 2) if p > 0 else mpf(0)


def simulate(d_ul, d_dl, n_ul, n_dl, alpha, gains, betas=(0.25, 0.5, 0.75, 1.0),
             f_edge=F_EDGE, f_enc=F_ENC):
    """One frame, UL slots first then DL slots."""
    d_ul, d_dl, alpha = mpf(d_ul), mpf(d_dl), mpf(alpha)
    gains = [mpf(g) for g in gains]
    power = P_UL_MAX
    for b in sorted(betas):
        p = mpf(b) * P_UL_MAX
        if n_ul * rate(gains[0], p) * SLOT >= d_ul:
            power = p
            break
    d_edge, d_loc = alpha * d_dl, (1 - alpha) * d_dl
    l_ul, l_dl = n_ul * SLOT, n_dl * SLOT
    l_edge = d_edge / f_edge + d_edge / f_enc
    l_dec, l_loc = d_edge / F_DEC, d_loc / F_LOC
    l_total = l_ul + l_dl + l_dec + l_loc
    disp = 0 if l_ul >= l_edge else int(ceil((l_edge - l_ul) / SLOT))
    ul_sent = sum(rate(gains[t], power) * SLOT for t in range(n_ul))
    dl_sent = sum(rate(gains[t], P_BS) * SLOT for t in range(n_ul + min(disp, n_dl), n_ul + n_dl))
    e_ul = l_ul * power
    e_ul_edge = e_ul + disp * SLOT * P_IDLE
    e_dl = max(n_dl - disp, 0) * SLOT * P_DL
    e_dec = d_edge / F_DEC * P_DEC
    e_loc = l_loc * P_LOC
    fli_ul = int(ul_sent < d_ul)
    fli_dl = int(dl_sent < d_edge or l_total > mpf("20e-3") or fli_ul)
    return dict(power=power, l_edge=l_edge, l_total=l_total, disp=disp, ul_sent=ul_sent,
                dl_sent=dl_sent, e_ul_edge=e_ul_edge, e_dl=e_dl, e_dec=e_dec, e_loc=e_loc,
                e_total=e_ul_edge + e_dl + e_dec + e_loc, fli_ul=fli_ul, fli_dl=fli_dl)


def flat_slice():
    return [mpf("1e-11")] * 16


def reward(o, sigma, e_max):
    return -sigma * (o["fli_ul"] + o["fli_dl"]) - (1 - sigma) * o["e_total"] / e_max


def show(name, v):
    print(f"{name} = {mp.nstr(v, 17)}")


if __name__ == "__main__":
    show("path_loss(500)", path_loss(mpf(500)))
    show("path_loss(100)", path_loss(mpf(100)))
    show("noise_dbm", NOISE_DBM)
    show("noise_w", NOISE_W)
    show("p_bs", P_BS)
    show("l_edge(466667)", mpf(466667) / F_EDGE + mpf(466667) / F_ENC)
    d_max = mpf("1.5") * mpf(28e6) / 60
    e_max = 16 * SLOT * max(P_UL_MAX, P_DL) + d_max / F_DEC * P_DEC + d_max / F_LOC * P_LOC
    show("e_max", e_max)

    # Gain at which beta = 0.5 gives SNR 3 (rate 2B): 4 slots carry 160 kbit.
    g_half = 3 * NOISE_W / (mpf("0.5") * P_UL_MAX)
    show("g_half", g_half)
    for b in (0.25, 0.5):
        show(f"bits(4 slots, beta {b})", 4 * rate(g_half, mpf(b) * P_UL_MAX) * SLOT)

    # Pinned scenario: fixed 16-slot slice, mid-frame sizes, mixed action.
    g = [mpf(f"{k}e-11") for k in (3, 2.5, 2, 1.5, 1, 4, 5, 6, 0.8, 0.9, 1.1, 1.2, 1.3, 1.4, 1.6, 1.7)]
    o = simulate(150000, 500000, 3, 5, 0.75, g)
    for k, v in o.items():
        show(f"scenario.{k}", mpf(v))
    show("scenario.reward", reward(o, mpf("0.7"), e_max))

    # Slow edge (1 Gbit/s render and encode): one DL slot displaced; the single UL
    # slot cannot carry the frame, which also sinks the DL frame.
    o = simulate(141667, 600000, 1, 6, 1.0, flat_slice(), f_edge=mpf(1e9), f_enc=mpf(1e9))
    for k, v in o.items():
        show(f"slow_edge.{k}", mpf(v))

    # Two-slot UL sum on a fading slice.
    fading = [mpf("2.2e-11"), mpf("7.5e-12")]
    show("ul_sent(2 slots, 0.2 W)", sum(rate(x, P_UL_MAX) * SLOT for x in fading))

    # Toy oracle grid: three actions on one frame, constant gain 1e-11.
    flat = [mpf("1e-11")] * 16
    for a in ((2, 3, 1.0), (5, 0, 0.0), (4, 4, 0.5)):
        o = simulate(141667, 466667, *a, flat)
        show(f"toy{a}.reward", reward(o, mpf("0.7"), e_max))
