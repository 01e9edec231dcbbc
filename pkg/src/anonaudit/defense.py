"""Embedding-space defense: contrastive perturbations under an L-inf pixel budget."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_ETA = 0.1
DEFAULT_TEMP = 0.1
DEFAULT_ITERS = 100
DEFAULT_EPSILONS = (2, 4, 8)


@dataclass(frozen=True)
class ToyEncoder:
    """Random-projection encoder with a tanh nonlinearity and unit-norm output.

    encode(x) = tanh(W @ flatten(x)) scaled to unit L2 norm. Weights are drawn
    N(0, sigma^2) with sigma^2 = 1 / sqrt(embed_dim * n_pixels); no bias.
    """

    weights: np.ndarray

    @classmethod
    def create(cls, n_pixels: int, embed_dim: int, rng_seed: int) -> "ToyEncoder":
        if n_pixels < 1:
            raise ValueError("n_pixels must be >= 1")
        if embed_dim < 2:
            raise ValueError("embed_dim must be >= 2")
        rng = np.random.default_rng(rng_seed)
        std = (embed_dim * n_pixels) ** -0.25
        return cls(weights=rng.normal(0.0, std, size=(embed_dim, n_pixels)))

    @property
    def n_pixels(self) -> int:
        return self.weights.shape[1]

    @property
    def embed_dim(self) -> int:
        return self.weights.shape[0]

    def _pre(self, image) -> np.ndarray:
        x = np.asarray(image, dtype=np.float64).ravel()
        if x.size != self.n_pixels:
            raise ValueError(f"image has {x.size} pixels, encoder expects {self.n_pixels}")
        return x

    def encode(self, image) -> np.ndarray:
        t = np.tanh(self.weights @ self._pre(image))
        norm = np.linalg.norm(t)
        if norm == 0:
            raise ValueError("degenerate pre-activation; cannot normalize")
        return t / norm

    def vjp(self, image, cotangent) -> np.ndarray:
        """Gradient of cotangent . encode(image) with respect to the image.

        With t = tanh(Wx), e = t/|t|: the cotangent pulls back through the
        normalization projector (c - (c.e) e)/|t| and the tanh Jacobian 1 - t^2.
        """
        x = self._pre(image)
        c = np.asarray(cotangent, dtype=np.float64)
        if c.shape != (self.embed_dim,):
            raise ValueError("cotangent must match the embedding dimension")
        t = np.tanh(self.weights @ x)
        norm = np.linalg.norm(t)
        if norm == 0:
            raise ValueError("degenerate pre-activation; cannot normalize")
        e = t / norm
        v = (c - np.dot(c, e) * e) / norm
        grad = self.weights.T @ ((1.0 - t ** 2) * v)
        return grad.reshape(np.asarray(image).shape)


def toy_encoder(seed: int, input_shape, m: int) -> ToyEncoder:
    """Factory over an image shape: toy_encoder(seed, (H, W), m)."""
    n_pixels = int(np.prod(input_shape))
    return ToyEncoder.create(n_pixels, m, seed)


def make_encoder_ensemble(n_encoders: int, n_pixels: int, embed_dim: int,
                          rng_seed: int) -> list[ToyEncoder]:
    """Independent encoders seeded rng_seed, rng_seed+1, ..."""
    if n_encoders < 1:
        raise ValueError("need at least one encoder")
    return [ToyEncoder.create(n_pixels, embed_dim, rng_seed + i)
            for i in range(n_encoders)]


def cosine_similarity(u, v) -> float:
    a = np.asarray(u, dtype=np.float64).ravel()
    b = np.asarray(v, dtype=np.float64).ravel()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("cosine similarity undefined for zero vectors")
    return float(np.dot(a, b) / (na * nb))


def contrastive_loss(z, e_pos, e_neg, tau_temp: float = DEFAULT_TEMP
                     ) -> tuple[float, np.ndarray]:
    """Two-way softmax loss over tempered cosine similarities, with its gradient.

    loss = -log p_pos + log p_neg where p are softmax weights of s_pos/tau and
    s_neg/tau (algebraically (s_neg - s_pos)/tau; kept in log-softmax form).
    Returns (loss, d loss / d z).
    """
    if tau_temp <= 0:
        raise ValueError("tau_temp must be > 0")
    zv = np.asarray(z, dtype=np.float64).ravel()
    s_pos = cosine_similarity(zv, e_pos)
    s_neg = cosine_similarity(zv, e_neg)
    a, b = s_pos / tau_temp, s_neg / tau_temp
    lse = np.logaddexp(a, b)
    loss = float(-(a - lse) + (b - lse))

    # d cos(z, u)/dz = (u_hat - cos * z_hat) / |z|; d loss/d s_pos = -1/tau,
    # d loss/d s_neg = +1/tau (the softmax normalizers cancel exactly)
    nz = np.linalg.norm(zv)
    z_hat = zv / nz
    up = np.asarray(e_pos, dtype=np.float64).ravel()
    un = np.asarray(e_neg, dtype=np.float64).ravel()
    up_hat = up / np.linalg.norm(up)
    un_hat = un / np.linalg.norm(un)
    grad = (-(up_hat - s_pos * z_hat) + (un_hat - s_neg * z_hat)) / (tau_temp * nz)
    return loss, grad


def project_linf(original, perturbed, eps01: float) -> np.ndarray:
    """Clamp the perturbed field into the L-inf box of radius eps01 (in [0,1]
    pixel units) around the original, then into valid range [0, 1]."""
    if eps01 < 0:
        raise ValueError("eps01 must be >= 0")
    orig = np.asarray(original, dtype=np.float64)
    cand = np.asarray(perturbed, dtype=np.float64)
    if cand.shape != orig.shape:
        raise ValueError("perturbed and original must share a shape")
    return np.clip(np.clip(cand, orig - eps01, orig + eps01), 0.0, 1.0)


def select_positive_target(e_star, candidates) -> int:
    """Index of the least-similar candidate embedding.

    ``candidates`` is a sequence of (model_id, embedding); exact similarity
    ties resolve to the smaller model id.
    """
    cands = list(candidates)
    if not cands:
        raise ValueError("candidate list is empty")
    scored = [(cosine_similarity(e_star, emb), model_id, idx)
              for idx, (model_id, emb) in enumerate(cands)]
    scored.sort()
    return scored[0][2]


@dataclass
class DefenseConfig:
    """Budget and optimizer settings plus the surrogate encoder ensemble.

    epsilon_8bit is the L-inf budget in 8-bit pixel counts ({2, 4, 8} in the
    usual sweeps; 0 is allowed and makes defend a no-op for baseline rows).
    """

    encoders: list[ToyEncoder]
    epsilon_8bit: float
    eta: float = DEFAULT_ETA
    tau_temp: float = DEFAULT_TEMP
    iters: int = DEFAULT_ITERS

    def __post_init__(self) -> None:
        if not self.encoders:
            raise ValueError("need at least one encoder")
        if self.epsilon_8bit < 0:
            raise ValueError("epsilon must be >= 0")
        if self.eta <= 0:
            raise ValueError("eta must be > 0")
        if self.tau_temp <= 0:
            raise ValueError("tau_temp must be > 0")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")


@dataclass
class DefenseResult:
    image: np.ndarray
    delta: np.ndarray
    loss_history: list[float] = field(default_factory=list)

    @property
    def initial_loss(self) -> float:
        return self.loss_history[0]

    @property
    def final_loss(self) -> float:
        return self.loss_history[-1]

    @property
    def linf(self) -> float:
        return float(np.max(np.abs(self.delta)))


def defend(image, positive_image, config: DefenseConfig) -> DefenseResult:
    """Perturb ``image`` so the surrogate ensemble sees it as the positive
    target rather than as itself.

    The negative anchor is the unmodified input, the positive the supplied
    target image (pick it with select_positive_target over a candidate pool).
    Each step descends the raw mean contrastive-loss gradient (no sign-taking),
    then projects onto the epsilon/255 L-inf ball intersected with [0, 1].
    Epsilon 0 returns the input bit-exactly.
    """
    x0 = np.asarray(image, dtype=np.float64)
    if np.min(x0) < 0.0 or np.max(x0) > 1.0:
        raise ValueError("image values must lie in [0, 1]")
    x_pos = np.asarray(positive_image, dtype=np.float64)
    if x_pos.shape != x0.shape:
        raise ValueError("positive image must match the input shape")
    eps01 = config.epsilon_8bit / 255.0
    # each encoder defines its own space: anchors are re-embedded per encoder
    anchors = [(enc.encode(x_pos), enc.encode(x0)) for enc in config.encoders]

    def ensemble_loss_and_grad(x):
        total_loss = 0.0
        total_grad = np.zeros_like(x)
        for enc, (e_pos, e_neg) in zip(config.encoders, anchors):
            z = enc.encode(x)
            loss, dz = contrastive_loss(z, e_pos, e_neg, config.tau_temp)
            total_loss += loss
            total_grad += enc.vjp(x, dz)
        return total_loss / len(config.encoders), total_grad / len(config.encoders)

    x = x0.copy()
    history: list[float] = []
    for it in range(config.iters):
        loss, grad = ensemble_loss_and_grad(x)
        if not np.isfinite(loss):
            raise ValueError(f"non-finite loss at iteration {it}; trace: {history}")
        history.append(loss)
        x = project_linf(x0, x - config.eta * grad, eps01)
    history.append(ensemble_loss_and_grad(x)[0])
    return DefenseResult(image=x, delta=x - x0, loss_history=history)


def gaussian_noise_undo(image, sigma: float, rng_seed: int) -> np.ndarray:
    """Platform counter-move: add seeded N(0, sigma^2) pixel noise, clamped to [0, 1]."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    arr = np.asarray(image, dtype=np.float64)
    rng = np.random.default_rng(rng_seed)
    return np.clip(arr + rng.normal(0.0, sigma, size=arr.shape), 0.0, 1.0)
