"""High-precision reference values for the physics tests.

Run with `python3 physics_oracle.py`. The printed constants are frozen in
`tests/physics_oracle.rs`. Formulas are written out independently of the
Rust implementation; the energy share factor uses the unsimplified
compressibility term.
"""
from mpmath import mp, mpf, sqrt, exp

mp.dps = 50

G = mpf("9.80665")
R = mpf("287.05287")
K = mpf("1.4")
BETA = mpf("-0.0065")
T0 = mpf("288.15")
P0 = mpf("101325")
H_TROP = mpf("11000")
FT = mpf("0.3048")

# Synthetic A320-like defaults.
S = mpf("122.6")
CD0 = mpf("0.025")
CD2 = mpf("0.038")
CTC1 = mpf("140000")
CTC2 = mpf("50000")
CTC3 = mpf("1e-10")
C_RED = mpf(1)


def temperature(h, dT):
    h = min(h, H_TROP)
    return T0 + dT + BETA * h


def pressure(h):
    if h <= H_TROP:
        return P0 * ((T0 + BETA * h) / T0) ** (-G / (BETA * R))
    t_trop = T0 + BETA * H_TROP
    p_trop = P0 * (t_trop / T0) ** (-G / (BETA * R))
    return p_trop * exp(-G / (R * t_trop) * (h - H_TROP))


def density(h, dT):
    return pressure(h) / (R * temperature(h, dT))


def sound(h, dT):
    return sqrt(K * R * temperature(h, dT))


def cas_to_tas(v, h, dT):
    mu = (K - 1) / K
    rho0 = P0 / (R * T0)
    p, rho = pressure(h), density(h, dT)
    qc = P0 * ((1 + mu / 2 * rho0 / P0 * v * v) ** (1 / mu) - 1)
    return sqrt(2 / mu * p / rho * ((1 + qc / p) ** mu - 1))


def thrust(h):
    hf = h / FT
    return CTC1 * (1 - hf / CTC2 + CTC3 * hf * hf)


def drag(v, h, dT, m):
    q = density(h, dT) * v * v / 2
    cl = m * G / (q * S)
    return (CD0 + CD2 * cl * cl) * q * S


def esf_cas_low(v, h, dT):
    t = temperature(h, dT)
    mach = v / sound(h, dT)
    lapse = K * R * BETA / (2 * G) * mach**2 * (t - dT) / t
    b = 1 + (K - 1) / 2 * mach**2
    comp = b ** (-1 / (K - 1)) * (b ** (K / (K - 1)) - 1)
    return 1 / (1 + lapse + comp)


def roc_cas_low_cst(v, h, dT, m):
    t = temperature(h, dT)
    excess = thrust(h) - drag(v, h, dT, m)
    return C_RED * (t - dT) / t * excess * v / (m * G) * esf_cas_low(v, h, dT)


def accel(h, v, hdot, dT, m):
    return (thrust(h) - drag(v, h, dT, m) - m * G * hdot / v) / m


def show(name, value):
    print(f"const {name}: f64 = {mp.nstr(value, 20, min_fixed=-30, max_fixed=30)};")


for h in (0, 5000, 11000, 15000):
    show(f"T_{h}", temperature(mpf(h), 0))
    show(f"P_{h}", pressure(mpf(h)))
    show(f"RHO_{h}", density(mpf(h), 0))
show("RHO_15000_DT10", density(mpf(15000), 10))
show("TAS_160_8000", cas_to_tas(mpf(160), mpf(8000), 0))
show("TAS_160_8000_DT12", cas_to_tas(mpf(160), mpf(8000), 12))
show("THRUST_10000FT", thrust(10000 * FT))
show("DRAG_140_3000_64000", drag(mpf(140), mpf(3000), 0, mpf(64000)))
v_m05 = mpf("0.5") * sound(mpf(5000), 0)
show("ESF_CAS_LOW_M05_5000", esf_cas_low(v_m05, mpf(5000), 0))
show("ROC_180_6000_DT8_68000", roc_cas_low_cst(mpf(180), mpf(6000), mpf(8), mpf(68000)))
show("ACCEL_6000_180_9_DT8_68000", accel(mpf(6000), mpf(180), mpf(9), mpf(8), mpf(68000)))
