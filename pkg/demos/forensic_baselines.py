"""Two classic forensic attributors: noise-residual fingerprints and spectra.

The residual method averages denoised-out noise patterns into a per-model
fingerprint and attributes by correlation. The spectral method fits a power
law to the azimuthally averaged Fourier spectrum and attributes in (log a, b)
space. Both are fast, interpretable — and much weaker than embedding-space
attribution once images share content.
"""

import numpy as np

from anonaudit import (dzanic_attribute, dzanic_signature, fit_power_law,
                       marra_attribute, marra_fingerprint,
                       planted_image_corpus, reduced_spectrum)

corpus = planted_image_corpus(8, n_train=40, n_test=5, side=48,
                              pattern_amp=0.025, noise_std=0.1,
                              scene_jitter=0.02, rng_seed=13)
fingerprints = {m: marra_fingerprint(corpus.train[m]) for m in range(8)}
hits = sum(marra_attribute(img, fingerprints)[0] == m
           for m in range(8) for img in corpus.test[m])
print(f"residual fingerprints: {hits}/{8 * 5} test images attributed "
      f"(SNR 0.25, chance 1/8)")


def power_law_images(beta, side, count, seed):
    rng = np.random.default_rng(seed)
    idx = np.fft.fftfreq(side) * side
    r = np.sqrt(idx[:, None] ** 2 + idx[None, :] ** 2)
    shaper = np.zeros_like(r)
    shaper[r > 0] = r[r > 0] ** (-beta / 2.0)
    return [np.fft.ifft2(np.fft.fft2(rng.standard_normal((side, side)))
                         * shaper).real for _ in range(count)]


print("\nspectral exponent recovery (64x64 synthesized power-law images):")
signatures = {}
for beta in (1, 2, 3):
    imgs = power_law_images(beta, 64, 6, 500 + beta)
    signatures[beta] = dzanic_signature(imgs)
    print(f"  true beta {beta} -> fitted {signatures[beta][1]:.3f}")

probe = power_law_images(2, 64, 1, 999)[0]
ranking = dzanic_attribute(probe, signatures)
freqs, power = reduced_spectrum(probe)
_, b = fit_power_law(freqs, power)
print(f"\nfresh beta=2 probe: fitted {b:.3f}, ranked {ranking} "
      f"(nearest signature first)")
print("""
Spectral slopes separate generators only when their spectra genuinely differ;
residual fingerprints need the pattern to survive averaging. Embedding-space
attribution needs neither assumption, which is why it dominates both.""")
