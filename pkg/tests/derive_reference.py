"""Independent high-precision derivation of the frozen reference values.

Run ``python tests/derive_reference.py`` to print them; the numbers are
pasted into ``tests/reference_values.py``.  Nothing here imports the package.
"""

import mpmath as mp

mp.mp.dps = 40


def shannon_rate(bandwidth, noise_dbm_per_hz, tx_power, distance, path_loss):
    noise = mp.power(10, mp.mpf(noise_dbm_per_hz) / 10) * mp.mpf("1e-3") * bandwidth
    snr = mp.mpf(tx_power) * mp.power(distance, -path_loss) / noise
    return bandwidth * mp.log(1 + snr, 2)


def main():
    rate = shannon_rate(mp.mpf(2e6), -174, mp.mpf("0.1"), 200, 4)
    print("RATE_200M =", mp.nstr(rate, 17))
    # access delay cost of 10 MB over that link
    print("ACCESS_10MB_200M =", mp.nstr(mp.mpf(10) * 8e6 / rate, 17))
    # acceptance probability at alpha=1, beta=1, U_target - U_cur = ln 3
    print("ACCEPT_LN3 =", mp.nstr(1 / (1 + mp.e ** mp.log(3)), 17))
    # Gibbs law for U = (0, ln2/beta)
    b = mp.mpf(5)
    u = [0, mp.log(2) / b]
    w = [mp.e ** (-b * x) for x in u]
    print("GIBBS_LN2 =", [mp.nstr(x / sum(w), 17) for x in w])
    print("GAP_BOUND_8_5 =", mp.nstr(mp.log(8) / 5, 17))


if __name__ == "__main__":
    main()
