"""Deterministic synthetic corpora for exercising the harness.

Everything here is seeded: the same arguments always produce the same
corpus, byte for byte under the canonical writer.  Texts are nonsense but
structurally realistic: section headings, claims, bilingual coverage, topic
clusters that give citation pairs real lexical overlap.
"""

from __future__ import annotations

import random
from datetime import date, timedelta

from .corpus import CitationRecord, Corpus, PatentDocument

DEFAULT_REFERENCE_DATE = date(2020, 6, 15)

EN_VOCAB = (
    "actuator adapter algorithm amplifier antenna array battery bearing bracket "
    "buffer bus cache calibration capacitor cartridge catalyst cell chamber "
    "channel circuit clamp coating compressor conduit connector controller "
    "converter coolant coupling damper decoder detector diaphragm diffuser "
    "diode dispenser electrode emitter encoder enclosure fastener filter "
    "firmware flange gasket gateway gearbox generator gyroscope harness heater "
    "housing hub impeller inductor injector insulator interface inverter "
    "junction laminate latch lattice ledger lens manifold membrane microphone "
    "modulator module motor mount nozzle oscillator panel payload piston "
    "pivot polymer processor pump reactor receiver rectifier regulator relay "
    "resin resonator rotor router seal sensor servo shaft shroud socket "
    "solenoid spindle stator substrate switch terminal transceiver transducer "
    "transformer turbine valve vent waveguide winding"
).split()

EN_VERBS = (
    "receives transmits filters regulates couples drives monitors adjusts "
    "converts stores amplifies dampens aligns encodes isolates measures "
    "modulates routes samples stabilizes"
).split()

ZH_VOCAB = (
    "电池 控制 模块 数据 处理 系统 方法 装置 信号 网络 传感 器件 电路 芯片 存储 "
    "单元 检测 算法 图像 通信 电机 驱动 轴承 阀门 泵体 压缩 冷却 加热 涂层 基板 "
    "天线 滤波 编码 解码 转换 调节 联轴 外壳 支架 密封"
).split()

_EN_HEADINGS = ("BACKGROUND", "SUMMARY", "DETAILED DESCRIPTION")
_ZH_HEADINGS = ("背景技术", "发明内容", "具体实施方式")


def _en_sentence(rng: random.Random, pool: list[str]) -> str:
    subject = rng.choice(pool)
    verb = rng.choice(EN_VERBS)
    obj = rng.choice(pool)
    tail = rng.choice(pool)
    return f"The {subject} {verb} the {obj} through the {tail}."


def _zh_sentence(rng: random.Random, pool: list[str]) -> str:
    words = [rng.choice(pool) for _ in range(rng.randint(4, 7))]
    return "所述" + "".join(words) + "。"


def _description(rng: random.Random, pool: list[str], language: str) -> str:
    if language == "zh":
        headings = _ZH_HEADINGS
        sent = _zh_sentence
    else:
        headings = _EN_HEADINGS
        sent = _en_sentence
    counts = (rng.randint(2, 4), rng.randint(1, 2), rng.randint(4, 8))
    parts = []
    for heading, n in zip(headings, counts):
        body = " ".join(sent(rng, pool) for _ in range(n))
        parts.append(f"{heading}\n{body}")
    return "\n\n".join(parts)


def _claims(rng: random.Random, pool: list[str], language: str) -> str:
    if language == "zh":
        return "1. 一种" + "".join(rng.choice(pool) for _ in range(3)) + "装置。 " + _zh_sentence(rng, pool)
    head = rng.choice(pool)
    items = ", ".join(f"a {rng.choice(pool)}" for _ in range(rng.randint(2, 4)))
    return f"1. A {head} comprising {items}. 2. {_en_sentence(rng, pool)}"


def _mutate(rng: random.Random, text: str, pool: list[str], n_edits: int) -> str:
    """Near-copy: swap a handful of words and append one sentence.

    Edits stay small so character 3-gram similarity to the original remains
    well above the family alignment threshold.
    """
    words = text.split(" ")
    for _ in range(n_edits):
        i = rng.randrange(len(words))
        if words[i] in _EN_HEADINGS or words[i] in _ZH_HEADINGS:
            continue
        words[i] = rng.choice(pool)
    return " ".join(words) + " " + _en_sentence(rng, pool)


def _allocate(mix: dict[str, float], total: int) -> dict[str, int]:
    quotas = {key: p * total for key, p in mix.items()}
    alloc = {key: int(q) for key, q in quotas.items()}
    leftover = total - sum(alloc.values())
    for key in sorted(quotas, key=lambda k: (-(quotas[k] - alloc[k]), k))[:leftover]:
        alloc[key] += 1
    return alloc


def synthetic_corpus(
    n_docs: int = 200,
    seed: int = 0,
    reference_date: date = DEFAULT_REFERENCE_DATE,
    jurisdiction_mix: dict[str, float] | None = None,
    n_clusters: int = 20,
    old_fraction: float = 0.1,
) -> Corpus:
    """A mixed-jurisdiction corpus with families, citations, and headings.

    Jurisdiction mix defaults to 50% CN / 20% US / 20% EP / 10% WO with
    Chinese text for CN and English elsewhere.  Some families are
    same-language near-copies (high alignment), some cross-language
    translations (low alignment).  Roughly 45% of documents carry examiner
    X citations into their topic cluster.
    """
    mix = jurisdiction_mix or {"CN": 0.5, "US": 0.2, "EP": 0.2, "WO": 0.1}
    rng = random.Random(seed)
    alloc = _allocate(mix, n_docs)
    jurisdictions: list[str] = []
    for jur in sorted(alloc):
        jurisdictions.extend([jur] * alloc[jur])
    rng.shuffle(jurisdictions)

    cluster_pools_en = [rng.sample(EN_VOCAB, 14) for _ in range(n_clusters)]
    cluster_pools_zh = [rng.sample(ZH_VOCAB, 12) for _ in range(n_clusters)]
    sections = "GHABCF"
    section_weights = (30, 25, 10, 10, 10, 15)

    specs: list[dict] = []
    for i in range(n_docs):
        jur = jurisdictions[i]
        language = "zh" if jur == "CN" else "en"
        cluster = i % n_clusters
        section = rng.choices(sections, weights=section_weights)[0]
        ipc = f"{section}{rng.randint(1, 99):02d}{rng.choice('BFKLMN')} {rng.randint(1, 99)}/{rng.randint(0, 99):02d}"
        if rng.random() < old_fraction:
            filing = reference_date - timedelta(days=rng.randint(4000, 5400))
        else:
            filing = reference_date - timedelta(days=rng.randint(30, 3600))
        specs.append(
            {
                "doc_id": f"{jur}{100000 + i}A",
                "jurisdiction": jur,
                "language": language,
                "ipc_codes": (ipc,),
                "filing_date": filing,
                "cluster": cluster,
                "family_id": "",
            }
        )

    # Families: same-language pairs are near-copies, cross-language pairs are
    # independent texts sharing only a family id.
    fam_counter = 0
    same_lang_pairs: list[tuple[int, int]] = []
    by_lang: dict[str, list[int]] = {"en": [], "zh": []}
    for i, spec in enumerate(specs):
        by_lang[spec["language"]].append(i)
    for language, quota in (("en", 8), ("zh", 5)):
        pool = [i for i in by_lang[language] if not specs[i]["family_id"]]
        rng.shuffle(pool)
        for _ in range(quota):
            if len(pool) < 2:
                break
            a, b = pool.pop(), pool.pop()
            fam_counter += 1
            fam = f"F{fam_counter:04d}"
            specs[a]["family_id"] = fam
            specs[b]["family_id"] = fam
            same_lang_pairs.append((a, b))
    for _ in range(5):
        en_pool = [i for i in by_lang["en"] if not specs[i]["family_id"]]
        zh_pool = [i for i in by_lang["zh"] if not specs[i]["family_id"]]
        if not en_pool or not zh_pool:
            break
        a = rng.choice(en_pool)
        b = rng.choice(zh_pool)
        fam_counter += 1
        fam = f"F{fam_counter:04d}"
        specs[a]["family_id"] = fam
        specs[b]["family_id"] = fam

    copies = {b: a for a, b in same_lang_pairs}
    texts: dict[int, tuple[str, str, str, str]] = {}
    for i, spec in enumerate(specs):
        pool = (
            cluster_pools_zh[spec["cluster"]]
            if spec["language"] == "zh"
            else cluster_pools_en[spec["cluster"]]
        )
        title = " ".join(rng.choice(pool) for _ in range(3))
        abstract = (
            _zh_sentence(rng, pool) if spec["language"] == "zh" else _en_sentence(rng, pool)
        )
        claims = _claims(rng, pool, spec["language"])
        description = _description(rng, pool, spec["language"])
        texts[i] = (title, abstract, claims, description)
    for member, origin in sorted(copies.items()):
        pool = (
            cluster_pools_zh[specs[member]["cluster"]]
            if specs[member]["language"] == "zh"
            else cluster_pools_en[specs[member]["cluster"]]
        )
        title, abstract, claims, description = texts[origin]
        texts[member] = (
            title,
            abstract,
            claims,
            _mutate(rng, description, pool, n_edits=2),
        )

    documents = {}
    for i, spec in enumerate(specs):
        title, abstract, claims, description = texts[i]
        doc = PatentDocument(
            doc_id=spec["doc_id"],
            jurisdiction=spec["jurisdiction"],
            language=spec["language"],
            ipc_codes=spec["ipc_codes"],
            filing_date=spec["filing_date"],
            family_id=spec["family_id"],
            title=title,
            abstract=abstract,
            claims=claims,
            description=description,
        )
        documents[doc.doc_id] = doc

    by_cluster: dict[int, list[int]] = {}
    for i, spec in enumerate(specs):
        by_cluster.setdefault(spec["cluster"], []).append(i)
    citations: list[CitationRecord] = []
    for i, spec in enumerate(specs):
        if rng.random() >= 0.45:
            continue
        peers = [
            j
            for j in by_cluster[spec["cluster"]]
            if j != i
            and (not spec["family_id"] or specs[j]["family_id"] != spec["family_id"])
        ]
        if not peers:
            continue
        n_x = min(len(peers), rng.randint(1, 3))
        targets = rng.sample(peers, n_x)
        for j in targets:
            citations.append(
                CitationRecord(
                    citing_id=spec["doc_id"],
                    cited_id=specs[j]["doc_id"],
                    category="X",
                )
            )
        rest = [j for j in peers if j not in targets]
        for j in rng.sample(rest, min(len(rest), rng.randint(0, 2))):
            citations.append(
                CitationRecord(
                    citing_id=spec["doc_id"],
                    cited_id=specs[j]["doc_id"],
                    category=rng.choice("YA"),
                )
            )

    return Corpus(
        documents=documents,
        citations=tuple(citations),
        reference_date=reference_date,
    )


def near_copy_corpus(
    n_queries: int = 50,
    n_distractors: int = 60,
    seed: int = 0,
    language: str = "en",
    reference_date: date = DEFAULT_REFERENCE_DATE,
) -> tuple[Corpus, dict[str, set[str]]]:
    """Monolingual corpus where each query's relevant document is a lexical
    near-copy of the query patent.  Returns the corpus and the planted
    query -> relevant mapping (also present as examiner X citations)."""
    rng = random.Random(seed)
    vocab = list(EN_VOCAB) if language == "en" else list(ZH_VOCAB)
    jur = "US" if language == "en" else "CN"
    documents: dict[str, PatentDocument] = {}
    citations: list[CitationRecord] = []
    planted: dict[str, set[str]] = {}

    def make_doc(doc_id: str, pool: list[str], description: str, claims: str) -> PatentDocument:
        return PatentDocument(
            doc_id=doc_id,
            jurisdiction=jur,
            language=language,
            ipc_codes=(f"G{rng.randint(1, 99):02d}F {rng.randint(1, 99)}/{rng.randint(0, 99):02d}",),
            filing_date=reference_date - timedelta(days=rng.randint(30, 3000)),
            family_id="",
            title=" ".join(rng.choice(pool) for _ in range(3)),
            abstract=_en_sentence(rng, pool) if language == "en" else _zh_sentence(rng, pool),
            claims=claims,
            description=description,
        )

    for q in range(n_queries):
        pool = rng.sample(vocab, 12)
        qid = f"{jur}{500000 + q}A"
        rid = f"{jur}{600000 + q}A"
        description = _description(rng, pool, language)
        claims = _claims(rng, pool, language)
        documents[qid] = make_doc(qid, pool, description, claims)
        documents[rid] = make_doc(rid, pool, _mutate(rng, description, pool, n_edits=2), claims)
        citations.append(CitationRecord(citing_id=qid, cited_id=rid, category="X"))
        planted[qid] = {rid}
    for d in range(n_distractors):
        pool = rng.sample(vocab, 12)
        did = f"{jur}{700000 + d}A"
        documents[did] = make_doc(
            did, pool, _description(rng, pool, language), _claims(rng, pool, language)
        )

    corpus = Corpus(
        documents=documents, citations=tuple(citations), reference_date=reference_date
    )
    return corpus, planted


def corpus_with_planted_defects(seed: int = 0) -> tuple[Corpus, dict[str, object]]:
    """Small corpus carrying exactly five integrity defects.

    Returns the corpus and the expected findings: one dangling citation, one
    empty description, one empty claims, one malformed IPC code, one
    unrecognized language code.
    """
    rng = random.Random(seed)
    pool = rng.sample(EN_VOCAB, 12)
    reference = DEFAULT_REFERENCE_DATE

    def doc(doc_id: str, **overrides: object) -> PatentDocument:
        base = dict(
            doc_id=doc_id,
            jurisdiction="US",
            language="en",
            ipc_codes=(f"G06F {rng.randint(1, 99)}/{rng.randint(0, 99):02d}",),
            filing_date=reference - timedelta(days=rng.randint(100, 2000)),
            family_id="",
            title=" ".join(rng.choice(pool) for _ in range(3)),
            abstract=_en_sentence(rng, pool),
            claims=_claims(rng, pool, "en"),
            description=_description(rng, pool, "en"),
        )
        base.update(overrides)
        return PatentDocument(**base)  # type: ignore[arg-type]

    documents = {
        "US900001A": doc("US900001A"),
        "US900002A": doc("US900002A", description="  "),
        "US900003A": doc("US900003A", claims=""),
        "US900004A": doc("US900004A", ipc_codes=("9X99 1/00",)),
        "US900005A": doc("US900005A", language="xx"),
        "US900006A": doc("US900006A"),
    }
    citations = (
        CitationRecord(citing_id="US900001A", cited_id="US900006A", category="X"),
        CitationRecord(citing_id="US900001A", cited_id="US999999A", category="X"),
    )
    corpus = Corpus(
        documents=documents, citations=citations, reference_date=reference
    )
    expected = {
        "dangling_cited": "US999999A",
        "empty_description": "US900002A",
        "empty_claims": "US900003A",
        "malformed_ipc": "US900004A",
        "bad_language": "US900005A",
    }
    return corpus, expected
