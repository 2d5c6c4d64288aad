# Regenerates bleu_oracle.jsonl with sacrebleu (tok 13a, exp smoothing).
# Run once; the output is committed and the C++ tests never call Python.
import json
import random

import sacrebleu

VOCAB = ("el la los las un una médico médica enfermera enfermero doctor doctora "
         "dijo que ella él su trabajo hospital casa 3 12 1,5 2.000 año-nuevo "
         "l'homme c'est très bien , . ! ? ; : ( ) \" ' - & < > quello quella").split()


def sentence(rng, n):
    out = rng.choice(VOCAB)
    for _ in range(n - 1):
        out += (" " if rng.random() < 0.85 else "") + rng.choice(VOCAB)
    return out


def perturb(rng, s):
    toks = s.split()
    for _ in range(rng.randint(0, 4)):
        op = rng.random()
        if op < 0.4 and toks:
            toks[rng.randrange(len(toks))] = rng.choice(VOCAB)
        elif op < 0.7 and len(toks) > 1:
            del toks[rng.randrange(len(toks))]
        else:
            toks.insert(rng.randrange(len(toks) + 1), rng.choice(VOCAB))
    return " ".join(toks)


def main():
    rng = random.Random(20241019)
    with open("bleu_oracle.jsonl", "w", encoding="utf-8") as f:
        for i in range(20):
            n = rng.randint(1, 6)
            refs = [sentence(rng, rng.randint(1, 14)) for _ in range(n)]
            if i == 0:
                hyps = list(refs)
            elif i == 1:
                hyps = ["zzz qqq"] * n
            else:
                hyps = [perturb(rng, r) for r in refs]
            b = sacrebleu.corpus_bleu(hyps, [refs], tokenize="13a", smooth_method="exp")
            f.write(json.dumps({"hyps": hyps, "refs": refs, "score": b.score, "bp": b.bp,
                                "precisions": b.precisions, "sys_len": b.sys_len,
                                "ref_len": b.ref_len}, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
