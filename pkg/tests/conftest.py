import numpy as np
import pytest

from paxnn import models, synthgen
from paxnn.ingestion import split_dataset
from paxnn.seeding import derive_seed


@pytest.fixture(scope="session")
def small_population():
    """400 passengers from the default profile; enough for behavioral tests."""
    return synthgen.generate_population(
        synthgen.default_params(n_passengers=400, seed=42))


@pytest.fixture(scope="session")
def small_split(small_population):
    return split_dataset(small_population, 0.7, seed=derive_seed(42, "split"))


@pytest.fixture(scope="session")
def grammar_split():
    ds = synthgen.grammar_population(360, seed=7)
    return split_dataset(ds, 0.7, seed=1)


@pytest.fixture(scope="session")
def grammar_lstm(grammar_split):
    """A small sequence model trained to reproduce the cyclic rule."""
    train, _ = grammar_split
    cfg = models.TrainConfig(lstm_hidden=24, lstm_epochs=40, batch_size=64,
                             learning_rate=0.1)
    return models.train_lstm(train, 1, cfg, seed=11, hidden=24)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def random_lstm(seed=3, hidden=12):
    """Untrained model with the right shapes; fine for structural tests."""
    from paxnn import neural_core as nc
    params = nc.init_lstm(6, hidden, 6, seed)
    return models.LstmNextStep(params=params, hidden=hidden, horizon=1)


def random_direct_set(seed=3, hidden=12, horizons=6):
    from paxnn import neural_core as nc
    base = random_lstm(seed, hidden)
    out = {1: base}
    for h in range(2, horizons + 1):
        params = nc.init_lstm(6, hidden, 6, seed + h)
        out[h] = models.LstmNextStep(params=params, hidden=hidden, horizon=h)
    return models.DirectLstmSet(models=out)
