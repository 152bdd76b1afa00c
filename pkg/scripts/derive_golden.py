"""Independent derivation of the golden constants frozen into the test suite.

Uses mpmath at 40 digits and scipy ODE integration; nothing from the package
is imported so the numbers stay independent of the implementation.
"""
import mpmath as mp
import numpy as np
from scipy.integrate import solve_ivp, quad

mp.mp.dps = 40

alpha = mp.mpf(1) / 7200
t_max, t_min, t_on, t_off = mp.mpf(7), mp.mpf(2), mp.mpf(-44), mp.mpf(20)
p_on = mp.mpf(70)

# distribution constant and steady-state mean
k = (t_off - t_on) / mp.log((t_max - t_on) * (t_min - t_off) / ((t_min - t_on) * (t_max - t_off)))
t_bar = t_off - k * mp.log((t_max - t_on) / (t_min - t_on))
zeta = lambda r: (t_bar - r) / (t_off - t_bar)

# the steady-state mean also follows from integrating T * f0(T) over [t_min, t_max]
f0 = lambda T: k / ((t_off - T) * (T - t_on))
mass = mp.quad(f0, [t_min, t_max])
mean_quad = mp.quad(lambda T: T * f0(T), [t_min, t_max])
var_quad = mp.quad(lambda T: (T - t_bar) ** 2 * f0(T), [t_min, t_max])

# cycle times by closed form
t_on_time = mp.log((t_max - t_on) / (t_min - t_on)) / alpha
t_off_time = mp.log((t_off - t_min) / (t_off - t_max)) / alpha
duty = t_on_time / (t_on_time + t_off_time)

print("k", k)
print("t_bar_0", t_bar, "quad mean", mean_quad, "mass", mass)
print("var f0", var_quad)
print("zeta_max", zeta(t_max), "zeta_min", zeta(t_min))
print("on time", t_on_time, "off time", t_off_time)
print("duty", duty, "p0", duty * p_on)
# conditional variances of f0 given compressor state
def cond_moments(c):
    if c == 1:
        g = lambda T: 1 / (T - t_on)
    else:
        g = lambda T: 1 / (t_off - T)
    z = mp.quad(g, [t_min, t_max])
    m = mp.quad(lambda T: T * g(T), [t_min, t_max]) / z
    v = mp.quad(lambda T: (T - m) ** 2 * g(T), [t_min, t_max]) / z
    return m, v
print("cond on mean/var", cond_moments(1))
print("cond off mean/var", cond_moments(0))


# numerical limit cycle: integrate the ODE with event detection
def limit_cycle():
    a, tn, tf = float(alpha), float(t_on), float(t_off)

    def rhs_on(t, y):
        return [-a * (y[0] - tn)]

    def rhs_off(t, y):
        return [-a * (y[0] - tf)]

    hit_min = lambda t, y: y[0] - 2.0
    hit_min.terminal = True
    hit_max = lambda t, y: y[0] - 7.0
    hit_max.terminal = True
    s_on = solve_ivp(rhs_on, [0, 1e5], [7.0], events=hit_min, rtol=1e-12, atol=1e-12)
    s_off = solve_ivp(rhs_off, [0, 1e5], [2.0], events=hit_max, rtol=1e-12, atol=1e-12)
    ton, toff = s_on.t_events[0][0], s_off.t_events[0][0]
    return ton, toff, ton / (ton + toff)
print("numeric limit cycle (on, off, duty)", limit_cycle())

# median of f0(T|c=1): inverse CDF at u = 1/2
def median_on():
    g = lambda T: 1 / (T - t_on)
    total = mp.quad(g, [t_min, t_max])
    return mp.findroot(lambda x: mp.quad(g, [t_min, x]) - total / 2, 4.4)
print("on median", median_on())

# energy limits
w = mp.mpf("0.9")
print("energy lower 1+w zeta_max", 1 + w * zeta(t_max))
print("energy upper 1+w zeta_min", 1 + w * zeta(t_min))

# power limits (provision / absorption)
prov_lo = (t_bar - t_min) / (t_max - t_min) * (t_off - t_max) / (t_off - t_bar)
prov_hi = (t_off - t_max) / (t_off - t_bar) + (t_max - t_bar) * (t_max - t_on) / ((t_max - t_min) * (t_off - t_bar))
abs_lo = (t_max - t_bar) / (t_max - t_min) * (t_off - t_min) / (t_off - t_bar)
abs_hi = (t_off - t_min) / (t_off - t_bar) + (t_bar - t_min) * (t_min - t_on) / ((t_max - t_min) * (t_off - t_bar))
print("provision power limits", prov_lo, prov_hi)
print("absorption power limits", abs_lo, abs_hi)


# beta, rates at T=5, s=1, r=t_max, z=0, Pi 1 -> 0.5
def beta(pi, z, r):
    return ((pi - 1) - z) / (z - zeta(r))
b = beta(mp.mpf("0.5"), 0, t_max)
print("beta+ (z=0, pi 0.5, t_max)", b)


def rates(T, beta_, s, r):
    P = (T - t_off) + (t_off - r) * (1 - s)
    Q = (T - t_on) + (t_on - r) * (1 - s)
    X = (T - t_off) + (T - r) * beta_
    Y = (T - t_on) + (T - r) * beta_
    xi = alpha**2 * (P + Q) / (P * Q) * X * Y - alpha**2 * (1 + beta_) * (X + Y)
    r10 = max(0, -xi / (alpha * (T - t_off) + alpha * beta_ * (T - r)))
    r01 = max(0, -xi / (alpha * (T - t_on) + alpha * beta_ * (T - r)))
    return r10, r01
print("rates T=5 beta=b s=1 r=t_max", rates(mp.mpf(5), b, 1, t_max))
print("rates T=r=7 beta=b s=0.8", rates(t_max, b, mp.mpf("0.8"), t_max))
print("rates T=7-1e-7 beta=b s=0.8", rates(t_max - mp.mpf("1e-7"), b, mp.mpf("0.8"), t_max))
print("rates T=5 beta=0.3 s=1 r=t_min", rates(mp.mpf(5), mp.mpf("0.3"), 1, t_min))


def p_inst(T, c, b_minus, r_minus, b_plus, r_plus):
    ta = t_off if c == 1 else t_on
    return max(0, 1 - ((T - ta) + (T - r_plus) * b_plus) / ((T - ta) + (T - r_minus) * b_minus))
print("inst on->off T=5 Pi 1->0.5", p_inst(mp.mpf(5), 1, 0, t_max, b, t_max))
print("inst off->on T=5 Pi 1->1.5", p_inst(mp.mpf(5), 0, 0, t_max, beta(mp.mpf("1.5"), 0, t_max), t_max))

# on-cycle duration from T_max to T_min
print("on time 7->2", t_on_time)
# drift bounds at 10 s
e = 1 - mp.exp(-alpha * 10)
print("delta spec (t_off-t_min)", (t_off - t_min) * e, "max dir", max(t_off - t_min, t_max - t_on) * e)
