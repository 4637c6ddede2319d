import numpy as np
import pytest

from pixiefds.data import RawTriple, save_triples
from pixiefds.formats import FeatureFile, write_features


class SyntheticWorld:
    """A small grounded corpus with known cluster structure.

    Five object concepts (two synonym lemmas each) and three event
    concepts, realized as Gaussian clusters in a latent pixie space.
    Argument pixies are pulled toward the event pixie so the fitted
    world model couples X and Z through Y. Raw features are a random
    linear embedding of the latent pixies.
    """

    N_LATENT = 6
    RAW_DIM = 16

    def __init__(self, n_triples=1200, seed=7, coupling=0.4, spread=0.35):
        rng = np.random.default_rng(seed)
        self.object_lemmas = [
            ("horse", "pony"),
            ("mug", "cup"),
            ("tree", "bush"),
            ("car", "truck"),
            ("dog", "puppy"),
        ]
        self.event_lemmas = ["near", "on", "under"]
        k = self.N_LATENT
        self.object_means = rng.normal(0, 1, (5, k)) * 3.0
        self.event_means = rng.normal(0, 1, (3, k)) * 3.0
        self.embed = rng.normal(0, 1, (k, self.RAW_DIM))
        self.embed_offset = rng.normal(0, 1, self.RAW_DIM)

        rows = []
        triples = []
        for t in range(n_triples):
            i, kk = rng.integers(0, 5, size=2)
            j = rng.integers(0, 3)
            y = self.event_means[j] + spread * rng.normal(0, 1, k)
            x = self.object_means[i] + coupling * y + spread * rng.normal(0, 1, k)
            z = self.object_means[kk] + coupling * y + spread * rng.normal(0, 1, k)
            base = 3 * t
            rows.extend([x, y, z])
            triples.append(
                RawTriple(
                    image_id=f"img{t}",
                    arg1_lemma=self.object_lemmas[i][rng.integers(0, 2)],
                    event_lemma=self.event_lemmas[j],
                    arg2_lemma=self.object_lemmas[kk][rng.integers(0, 2)],
                    arg1_row=base,
                    event_row=base + 1,
                    arg2_row=base + 2,
                )
            )
        self.latent_rows = np.array(rows)
        self.raw_rows = (
            self.latent_rows @ self.embed
            + self.embed_offset
            + 0.01 * rng.normal(0, 1, (len(rows), self.RAW_DIM))
        )
        self.triples = triples

    def cluster_of(self, lemma):
        for i, pair in enumerate(self.object_lemmas):
            if lemma in pair:
                return i
        raise KeyError(lemma)

    def write(self, directory):
        triples_path = directory / "triples.tsv"
        features_path = directory / "features.fdsf"
        save_triples(triples_path, self.triples)
        write_features(
            features_path,
            FeatureFile(
                dim=self.RAW_DIM,
                count=self.raw_rows.shape[0],
                rows=self.raw_rows,
            ),
        )
        return triples_path, features_path


@pytest.fixture(scope="session")
def synthetic_world():
    return SyntheticWorld()


@pytest.fixture(scope="session")
def synthetic_corpus_dir(synthetic_world, tmp_path_factory):
    directory = tmp_path_factory.mktemp("corpus")
    synthetic_world.write(directory)
    return directory
