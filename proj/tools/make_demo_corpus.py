"""Writes data/demo_corpus.jsonl: four sources with disjoint vocabularies,
60 documents each, 5-7 sentences per document."""
import json
import random
import sys

VOCAB = {
    "news_article": dict(
        adj="municipal federal regional senior local rural coastal urban annual emergency",
        noun="council minister budget election senator governor ministry mayor parliament treasury",
        verb="approved rejected announced delayed debated funded audited proposed vetoed reviewed",
        adv="yesterday officially publicly abruptly quietly formally unanimously narrowly tonight swiftly"),
    "reddit_post": dict(
        adj="weird hilarious awkward chill random cursed wholesome sketchy petty cozy",
        noun="roommate landlord cat gamer neighbor sandwich meme subreddit couch playlist",
        verb="ghosted roasted upvoted spammed borrowed microwaved memed ignored yeeted binged",
        adv="lol honestly literally basically somehow lowkey anyway apparently seriously again"),
    "wikipedia_page": dict(
        adj="medieval baroque volcanic tectonic byzantine ottoman neolithic alpine tributary riverine",
        noun="cathedral dynasty archipelago glacier monastery fortress peninsula basin empire river",
        verb="spans borders flanks encloses predates succeeded founded drained annexed surrounds",
        adv="historically geographically traditionally roughly predominantly primarily notably largely chiefly partially"),
    "paper_abstract": dict(
        adj="convolutional stochastic bayesian sparse asymptotic empirical latent adversarial scalable robust",
        noun="estimator gradient benchmark regularizer architecture dataset optimizer transformer baseline kernel",
        verb="outperforms generalizes converges minimizes approximates regularizes parameterizes learns samples bounds",
        adv="provably significantly empirically theoretically consistently substantially jointly efficiently locally globally"),
}


def main(path="data/demo_corpus.jsonl", per_source=60, seed=20240601):
    rng = random.Random(seed)
    owner = {}
    for source, parts in VOCAB.items():
        for word in " ".join(parts.values()).split():
            if owner.setdefault(word, source) != source:
                raise SystemExit(f"'{word}' is shared by {owner[word]} and {source}")
    with open(path, "w") as out:
        for source, parts in VOCAB.items():
            v = {k: s.split() for k, s in parts.items()}
            for i in range(per_source):
                sentences = []
                for _ in range(rng.randint(5, 7)):
                    a, b = rng.sample(v["noun"], 2)
                    s = f"{rng.choice(v['adj'])} {a} {rng.choice(v['verb'])} {b} {rng.choice(v['adv'])}."
                    sentences.append(s[0].upper() + s[1:])
                doc = {"doc_id": f"{source}-{i:03d}", "source": source, "text": " ".join(sentences)}
                out.write(json.dumps(doc) + "\n")


if __name__ == "__main__":
    main(*sys.argv[1:2])
