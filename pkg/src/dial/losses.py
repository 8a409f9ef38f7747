"""Bradley-Terry source loss, critic score gap, gradient penalty and their combinations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Node
from .data import PreferenceSet
from .model import GraphParams, critic_head, embed, reward_head


class ConfigError(ValueError):
    pass


@dataclass
class LossBundle:
    src_loss: float
    wd_gap: float
    grad_penalty: float
    critic_loss: float
    embedder_da_loss: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def bradley_terry_loss(chosen_rewards: Node, rejected_rewards: Node) -> Node:
    """Mean of -log sigmoid(r+ - r-) over every (chosen, rejected) pair.

    ``chosen_rewards`` has shape (n,), ``rejected_rewards`` (n, k).
    """
    if chosen_rewards.shape[0] == 0:
        raise ValueError("empty preference batch")
    margins = ad.sub(ad.reshape(chosen_rewards, (-1, 1)), rejected_rewards)
    return ad.scale(ad.mean(ad.log_sigmoid(margins)), -1.0)


def source_preference_loss(gp: GraphParams, batch: PreferenceSet) -> Node:
    if len(batch) == 0:
        raise ValueError("empty preference batch")
    emb = embed(gp, batch.all_inputs())
    return _bt_from_embeddings(gp, emb, len(batch), batch.k)


def _bt_from_embeddings(gp: GraphParams, src_all_emb: Node, n: int, k: int) -> Node:
    rewards = reward_head(gp, src_all_emb)
    chosen = ad.take(rewards, slice(0, n))
    rejected = ad.reshape(ad.take(rewards, slice(n, None)), (n, k))
    return bradley_terry_loss(chosen, rejected)


def score_gap(gp: GraphParams, src_emb, tgt_emb) -> Node:
    """mean critic(source) - mean critic(target)."""
    if src_emb.shape[0] == 0 or tgt_emb.shape[0] == 0:
        raise ValueError("empty batch in wasserstein_gap")
    return ad.sub(ad.mean(critic_head(gp, src_emb)), ad.mean(critic_head(gp, tgt_emb)))


def wasserstein_gap(gp: GraphParams, src_batch: PreferenceSet | np.ndarray, tgt_inputs: np.ndarray) -> Node:
    """Critic gap between all source responses (chosen and rejected) and target examples."""
    src = src_batch.all_inputs() if isinstance(src_batch, PreferenceSet) else src_batch
    return score_gap(gp, embed(gp, src), embed(gp, tgt_inputs))


def interpolates(src_emb: np.ndarray, tgt_emb: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Random points on segments between shuffled source/target pairs.

    The larger side is permuted; the smaller side is drawn with replacement to
    match its size. One uniform mixing weight per pair.
    """
    ns, nt = len(src_emb), len(tgt_emb)
    if ns == 0 or nt == 0:
        raise ValueError("empty batch in gradient_penalty")
    m = max(ns, nt)
    si = rng.permutation(ns) if ns == m else rng.integers(0, ns, size=m)
    ti = rng.permutation(nt) if nt == m else rng.integers(0, nt, size=m)
    eps = rng.uniform(0.0, 1.0, size=(m, 1))
    return eps * src_emb[si] + (1.0 - eps) * tgt_emb[ti]


def penalty_at(gp: GraphParams, points) -> Node:
    """mean_i (||grad_z d(z_i)|| - 1)^2, differentiable in the critic weights."""
    g = ad.input_gradient_graph(gp.critic, gp.critic_acts, points)
    return ad.mean(ad.square(ad.sub(ad.euclidean_norm(g, axis=1), 1.0)))


def gradient_penalty(gp: GraphParams, src_emb: np.ndarray, tgt_emb: np.ndarray, rng: np.random.Generator) -> Node:
    return penalty_at(gp, interpolates(np.asarray(src_emb), np.asarray(tgt_emb), rng))


def critic_objective(gap, penalty, lambda_gp: float):
    """-gap + lambda_gp * penalty (minimised over the critic only)."""
    if lambda_gp < 0:
        raise ConfigError("lambda_gp must be >= 0")
    if isinstance(gap, Node) or isinstance(penalty, Node):
        return ad.add(ad.scale(gap, -1.0), ad.scale(penalty, lambda_gp))
    return -gap + lambda_gp * penalty


def embedder_objective(src_loss, gap, lambda_da: float):
    """src_loss + lambda_da * gap (minimised over embedder and reward head)."""
    if lambda_da < 0:
        raise ConfigError("lambda_da must be >= 0")
    if isinstance(src_loss, Node) or isinstance(gap, Node):
        return ad.add(src_loss, ad.scale(gap, lambda_da))
    return src_loss + lambda_da * gap
