#!/usr/bin/env python3
"""Regenerates the JSON/TSV fixtures in this directory.

All offsets are Unicode code-point offsets (Python str indices), matching the
library's scalar-value spans. Output is deterministic (fixed seed).
"""

import json
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent

DEFAULT_VOCAB = [
    {"name": "elaboration", "template_key": "wrong_part.elaboration"},
    {"name": "cause", "template_key": "wrong_part.cause", "inverse": "result"},
    {"name": "result", "template_key": "wrong_part.result", "inverse": "cause"},
    {"name": "contrast", "template_key": "wrong_part.contrast"},
    {"name": "concession", "template_key": "wrong_part.contrast"},
    {"name": "example", "template_key": "wrong_part.example"},
    {"name": "paraphrase", "template_key": "wrong_part.paraphrase"},
    {"name": "summary", "template_key": "wrong_part.paraphrase"},
    {"name": "background", "template_key": "wrong_part.elaboration"},
    {"name": "condition", "template_key": "wrong_part.cause"},
]


def dump(name, obj):
    (HERE / name).write_text(json.dumps(obj, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


def span_of(text, sub, start=0):
    i = text.index(sub, start)
    return [i, i + len(sub)]


# --- English prompt ------------------------------------------------------------

EN_PARAGRAPHS = [
    "People share ideas in many ways. Among these ways, language holds a special place.",
    "Language is a symbol, and a word does not resemble the thing it names. "
    "Because a word stands for a whole class of things, language is abstract. "
    'The word "dog" refers to every dog, not to one particular dog.',
    "Pictures, by contrast, resemble what they show. "
    "However, a picture cannot express a general idea. "
    "Therefore, only language lets us think about things we cannot see.",
]
EN_TEXT = "\n".join(EN_PARAGRAPHS)

EN_SENTENCES = {
    "s1": "People share ideas in many ways.",
    "s2": "Among these ways, language holds a special place.",
    "s3": "Language is a symbol, and a word does not resemble the thing it names.",
    "s4": "Because a word stands for a whole class of things, language is abstract.",
    "s5": 'The word "dog" refers to every dog, not to one particular dog.',
    "s6": "Pictures, by contrast, resemble what they show.",
    "s7": "However, a picture cannot express a general idea.",
    "s8": "Therefore, only language lets us think about things we cannot see.",
}
EN_CHUNKS = {
    "c1": ("s3", "Language is a symbol"),
    "c2": ("s3", "a word does not resemble the thing it names"),
    "c3": ("s4", "Because a word stands for a whole class of things"),
    "c4": ("s4", "language is abstract"),
}
EN_ANSWERS = {
    "aA1": ("Words do not resemble the things they name", "Look at how a word relates to the thing it names."),
    "aB": ("Language is an abstract symbol", "Ask what kind of symbol language is."),
    "aC": ("Language lets us think about what we cannot see", "Find what only language makes possible."),
}


def build_adg(adg_id, prompt_id, text, sentences, chunks, answers, edges, bindings):
    nodes = []
    for sid, s in sentences.items():
        nodes.append({"id": sid, "kind": "sentence", "span": span_of(text, s)})
    for cid, (parent, c) in chunks.items():
        start = text.index(sentences[parent])
        nodes.append({"id": cid, "kind": "chunk", "span": span_of(text, c, start)})
    for aid, (t, hint) in answers.items():
        nodes.append({"id": aid, "kind": "answer_cue", "text": t, "paragraph": 0, "hint": hint})
    return {
        "schema": "adg/1",
        "id": adg_id,
        "prompt_id": prompt_id,
        "prompt_text": text,
        "label_vocabulary": DEFAULT_VOCAB,
        "nodes": nodes,
        "edges": [{"src": s, "dst": d, "label": l} for s, d, l in edges],
        "criteria_bindings": bindings,
    }


EN_EDGES = [
    ("aB", "c1", "elaboration"),
    ("aB", "c4", "elaboration"),
    ("c4", "c3", "cause"),
    ("aA1", "c2", "paraphrase"),
    ("s4", "s5", "example"),
    ("s3", "s6", "contrast"),
    ("s6", "s7", "contrast"),
    ("s8", "s7", "cause"),
    ("aC", "s8", "paraphrase"),
    ("s2", "s1", "background"),
    ("s2", "s3", "elaboration"),
]

en1 = build_adg("en1", "en1", EN_TEXT, EN_SENTENCES, EN_CHUNKS, EN_ANSWERS, EN_EDGES,
                 {"A1": "aA1", "B": "aB", "C": "aC"})

EN_PROMPT = {
    "id": "en1",
    "prompt_text": EN_TEXT,
    "question": "Why does the author say that language holds a special place? Answer in 70 to 80 characters.",
    "length_constraint": {"min_chars": 70, "max_chars": 80},
    "criteria": [
        {"id": "A1", "description": "Words do not resemble the things they name", "max_score": 2},
        {"id": "B", "description": "Language is an abstract symbol", "max_score": 2,
         "sub_criteria": [
             {"id": "B1", "description": "Language is a symbol", "max_score": 1},
             {"id": "B2", "description": "The symbol is abstract", "max_score": 1},
         ]},
        {"id": "C", "description": "Language lets us think about what we cannot see", "max_score": 2},
    ],
    "explanation": "Model answer: Language is an abstract symbol that does not resemble what it names, "
                   "so it lets us think about what we cannot see. The key sentences are in paragraphs 2 and 3.",
}

# --- Japanese prompt ----------------------------------------------------------

JA_PARAGRAPHS = [
    "人間はさまざまな方法で考えを伝える。その中でも言葉は特別な位置を占めている。",
    "言葉は記号であり、言葉はそれが指すものに似ていない。言葉はものの集まり全体を表すので、言葉は抽象的である。"
    "「犬」という言葉は、特定の一匹ではなく、すべての犬を指す。",
    "一方、絵は描いたものに似ている。しかし、絵は一般的な考えを表すことができない。"
    "だから、言葉だけが目に見えないものについて考えることを可能にする。",
]
JA_TEXT = "\n".join(JA_PARAGRAPHS)
JA_SENTENCES = {
    "j1": "人間はさまざまな方法で考えを伝える。",
    "j2": "その中でも言葉は特別な位置を占めている。",
    "j3": "言葉は記号であり、言葉はそれが指すものに似ていない。",
    "j4": "言葉はものの集まり全体を表すので、言葉は抽象的である。",
    "j5": "「犬」という言葉は、特定の一匹ではなく、すべての犬を指す。",
    "j6": "一方、絵は描いたものに似ている。",
    "j7": "しかし、絵は一般的な考えを表すことができない。",
    "j8": "だから、言葉だけが目に見えないものについて考えることを可能にする。",
}
JA_CHUNKS = {
    "k1": ("j3", "言葉は記号であり"),
    "k2": ("j3", "言葉はそれが指すものに似ていない"),
    "k3": ("j4", "言葉はものの集まり全体を表すので"),
    "k4": ("j4", "言葉は抽象的である"),
}
JA_ANSWERS = {
    "bA": ("言葉は指すものに似ていない", "言葉と、それが指すものの関係に注目しよう。"),
    "bB": ("言葉は抽象的な記号である", "言葉はどのような記号なのかを考えよう。"),
    "bC": ("言葉は目に見えないものについて考えさせる", "言葉だけが可能にすることを探そう。"),
}
JA_EDGES = [
    ("bB", "k1", "elaboration"),
    ("bB", "k4", "elaboration"),
    ("k4", "k3", "cause"),
    ("bA", "k2", "paraphrase"),
    ("j4", "j5", "example"),
    ("j3", "j6", "contrast"),
    ("j6", "j7", "contrast"),
    ("j8", "j7", "cause"),
    ("bC", "j8", "paraphrase"),
    ("j2", "j1", "background"),
    ("j2", "j3", "elaboration"),
]
jp1 = build_adg("jp1", "jp1", JA_TEXT, JA_SENTENCES, JA_CHUNKS, JA_ANSWERS, JA_EDGES,
                {"A": "bA", "B": "bB", "C": "bC"})
JA_PROMPT = {
    "id": "jp1",
    "prompt_text": JA_TEXT,
    "question": "筆者が言葉は特別な位置を占めていると述べるのはなぜか。七十字以上八十字以内で説明せよ。",
    "length_constraint": {"min_chars": 70, "max_chars": 80},
    "criteria": [
        {"id": "A", "description": "言葉は指すものに似ていない", "max_score": 2},
        {"id": "B", "description": "言葉は抽象的な記号である", "max_score": 3},
        {"id": "C", "description": "言葉は目に見えないものについて考えさせる", "max_score": 2},
    ],
    "explanation": "解答例：言葉は指すものに似ていない抽象的な記号なので、目に見えないものについて考えることを可能にするから。",
}

# --- Templates ------------------------------------------------------------------

TEMPLATES_EN = {
    "full_credit": "This point is fully covered ({score_fraction}): \"{criterion_excerpt}\". Well done.",
    "insufficient_elements":
        "You refer to paragraph {paragraph_number} with \"{justification_cue}\". That is the right place, "
        "but some elements are insufficient. Compare your wording with what this point requires: \"{criterion_excerpt}\".",
    "no_reference":
        "We could not find the part of the text your answer relies on for this point ({score_fraction}). "
        "Reread the text and look for where it explains: \"{criterion_excerpt}\".",
    "off_structure":
        "Your answer uses \"{justification_cue}\" from paragraph {paragraph_number}, but that part does not lead to "
        "this point. Look for where the text explains: \"{criterion_excerpt}\".",
    "wrong_part.elaboration":
        "\"{justification_cue}\" (paragraph {paragraph_number}) adds detail to a different idea. "
        "Find the statement that this detail supports.",
    "wrong_part.cause":
        "\"{justification_cue}\" (paragraph {paragraph_number}) is a reason behind the key point, not the point itself. "
        "Ask what this reason leads to.",
    "wrong_part.result":
        "\"{justification_cue}\" (paragraph {paragraph_number}) is a consequence of the key point. "
        "Trace it back to the reason the text gives.",
    "wrong_part.contrast":
        "\"{justification_cue}\" (paragraph {paragraph_number}) is on the other side of a contrast ({relation_name}). "
        "Check which side the question asks about.",
    "wrong_part.example":
        "\"{justification_cue}\" (paragraph {paragraph_number}) is an example. "
        "Answer with the general statement it illustrates.",
    "wrong_part.paraphrase":
        "\"{justification_cue}\" (paragraph {paragraph_number}) restates a nearby idea, not the one this point needs.",
}
TEMPLATES_JA = {
    "full_credit": "この観点は満たされています（{score_fraction}）：「{criterion_excerpt}」。よくできました。",
    "insufficient_elements":
        "第{paragraph_number}段落の「{justification_cue}」に注目できています。ただし、要素が不足しています。"
        "この観点で求められている「{criterion_excerpt}」と比べてみましょう。",
    "no_reference":
        "この観点（{score_fraction}）について、解答が本文のどこに基づいているかが見つかりませんでした。"
        "「{criterion_excerpt}」を説明している部分を探しましょう。",
    "off_structure":
        "第{paragraph_number}段落の「{justification_cue}」を使っていますが、この観点にはつながりません。"
        "「{criterion_excerpt}」を説明している部分を探しましょう。",
    "wrong_part.elaboration":
        "「{justification_cue}」（第{paragraph_number}段落）は別の内容を詳しく説明している部分です。"
        "この説明が支えている文を探しましょう。",
    "wrong_part.cause":
        "「{justification_cue}」（第{paragraph_number}段落）は要点の理由にあたる部分です。"
        "この理由から何が導かれるかを考えましょう。",
    "wrong_part.result":
        "「{justification_cue}」（第{paragraph_number}段落）は要点から導かれる結果です。本文が示す理由までさかのぼりましょう。",
    "wrong_part.contrast":
        "「{justification_cue}」（第{paragraph_number}段落）は対比（{relation_name}）の反対側です。"
        "問われているのはどちら側かを確認しましょう。",
    "wrong_part.example":
        "「{justification_cue}」（第{paragraph_number}段落）は具体例です。例が示している一般的な内容で答えましょう。",
    "wrong_part.paraphrase":
        "「{justification_cue}」（第{paragraph_number}段落）は近くの内容の言い換えで、この観点で必要な内容ではありません。",
}

templates = []
for lang, table in (("en", TEMPLATES_EN), ("ja", TEMPLATES_JA)):
    for key, body in table.items():
        templates.append({"key": key, "scope": "generic", "language": lang, "body": body})
templates += [
    {"key": "analytic.C.visible_only", "scope": "analytic", "criterion_id": "C", "error_signature": "visible_only",
     "language": "en",
     "body": "Your answer only talks about things we can see. Paragraph 3 explains what language lets us do "
             "beyond that ({score_fraction})."},
    {"key": "analytic.C.visible_only", "scope": "analytic", "criterion_id": "C", "error_signature": "visible_only",
     "language": "ja",
     "body": "解答が目に見えるものの話だけになっています。第3段落で、言葉がそれを超えて何を可能にするかを確認しましょう（{score_fraction}）。"},
]
dump("templates.json", {"schema": "adg-templates/1", "templates": templates})
dump("en1.adg.json", en1)
dump("jp1.adg.json", jp1)

# --- Corpora ---------------------------------------------------------------------


def make_response(rid, prompt_id, parts, scores, signatures=None):
    """parts: list of (criterion or None, text). Cue spans point at the parts."""
    text = ""
    per = {}
    for criterion, piece in parts:
        if text:
            text += " " if prompt_id == "en1" else "、"
        start = len(text)
        text += piece
        if criterion is not None:
            per.setdefault(criterion, {})["cue_span"] = [start, start + len(piece)]
    text += "." if prompt_id == "en1" else "。"
    for criterion, score in scores.items():
        per.setdefault(criterion, {})["score"] = score
        if signatures and criterion in signatures:
            per[criterion]["error_signature"] = signatures[criterion]
    for entry in per.values():
        entry.setdefault("score", 0)
    ordered = {c: {k: v for k, v in sorted(e.items(), key=lambda kv: ["score", "cue_span", "error_signature"].index(kv[0]))}
               for c, e in per.items()}
    return {"response_id": rid, "prompt_id": prompt_id, "text": text, "per_criterion": ordered}


walkthrough = make_response(
    "r-walkthrough", "en1",
    [("B", "Language is a symbol"), ("A1", "words do not resemble the things they name"),
     ("C", "it lets us think about things we cannot see")],
    {"A1": 2, "B": 1, "C": 2})
dump("walkthrough_corpus.json", {"schema": "adg-corpus/1", "prompts": [EN_PROMPT], "responses": [walkthrough]})
dump("prompts.json", {"schema": "adg-corpus/1", "prompts": [EN_PROMPT, JA_PROMPT], "responses": []})

full = make_response(
    "r-full", "en1",
    [("B", "Language is an abstract symbol"), ("A1", "a word does not resemble the thing it names"),
     ("C", "only language lets us think about things we cannot see")],
    {"A1": 2, "B": 2, "C": 2})
dump("full_corpus.json", {"schema": "adg-corpus/1", "prompts": [EN_PROMPT], "responses": [full]})

rng = random.Random(20240917)


def candidate_texts(adg):
    return [(n["id"], n.get("text") or adg["prompt_text"][n["span"][0]:n["span"][1]])
            for n in adg["nodes"] if n["kind"] != "answer_cue"]


def perturb(text, lang):
    if lang == "en":
        words = text.split()
        if len(words) > 4:
            del words[rng.randrange(1, len(words) - 1)]
        return " ".join(words)
    cut = rng.randrange(0, 3)
    return text[cut:] if len(text) > 6 else text


batch = []
for i in range(20):
    prompt = EN_PROMPT if i % 2 == 0 else JA_PROMPT
    adg = en1 if prompt is EN_PROMPT else jp1
    lang = "en" if prompt is EN_PROMPT else "ja"
    nodes = candidate_texts(adg)
    parts, scores, signatures = [], {}, {}
    for c in prompt["criteria"]:
        scores[c["id"]] = rng.randint(0, c["max_score"])
        roll = rng.random()
        if roll < 0.15 and scores[c["id"]] == 0:
            parts.append((None, "I am not sure" if lang == "en" else "よくわからない"))
            continue
        node_id, text = rng.choice(nodes)
        parts.append((c["id"], perturb(text.rstrip(".。"), lang)))
        if c["id"] == "C" and scores["C"] == 0 and rng.random() < 0.5:
            signatures["C"] = "visible_only"
    batch.append(make_response(f"b{i:02d}", prompt["id"], parts, scores, signatures))
dump("batch_corpus.json", {"schema": "adg-corpus/1", "prompts": [EN_PROMPT, JA_PROMPT], "responses": batch})


def exact_corpus(adversarial_every):
    nodes = candidate_texts(en1)
    responses, oracle = [], []
    k = 0
    for i in range(10):
        parts, scores = [], {}
        for c in EN_PROMPT["criteria"]:
            node_id, text = nodes[(i * 3 + len(parts) * 5) % len(nodes)]
            cue = text
            if adversarial_every and k % adversarial_every == adversarial_every - 1:
                other_id, cue = nodes[(nodes.index((node_id, text)) + 1) % len(nodes)]
            parts.append((c["id"], cue))
            scores[c["id"]] = 1
            oracle.append({"response_id": f"e{i:02d}", "criterion_id": c["id"], "node_id": node_id})
            k += 1
        responses.append(make_response(f"e{i:02d}", "en1", parts, scores))
    return {"schema": "adg-corpus/1", "prompts": [EN_PROMPT], "responses": responses, "oracle_nodes": oracle}


dump("exact_corpus.json", exact_corpus(0))
dump("planted_corpus.json", exact_corpus(10))

# --- Published tables ---------------------------------------------------------------

(HERE / "table1.tsv").write_text(
    "# id\tn1\tmean1\tsd1\tn2\tmean2\tsd2\texpected  (answer explanation vs feedback condition)\n"
    "motivated_to_reanswer\t35\t4.2\t1.4\t35\t5.2\t0.7\t**\n"
    "recognize_good_points\t35\t3.5\t1.2\t35\t4.7\t1.2\t**\n"
    "recognize_errors\t35\t4.8\t1.2\t35\t5.5\t0.7\t**\n"
    "what_to_focus_on\t35\t4.5\t1.3\t35\t5.4\t0.8\t**\n"
    "helpful_explanations\t35\t5.0\t1.3\t35\t5.6\t0.8\t*\n"
    "logical_relationship\t35\t4.4\t1.0\t35\t4.6\t0.9\tns\n"
    "gain_confidence\t35\t4.1\t1.3\t35\t4.5\t1.0\tns\n"
    "satisfactorily_reanswer\t35\t4.3\t1.2\t35\t4.8\t0.9\t**\n",
    encoding="utf-8")
(HERE / "table2.tsv").write_text(
    "# id\tanswer_explanation(I)\tfeedback(II)\tneither(III)\texpected\n"
    "logical_relationship\t22\t8\t5\t**(I)\n"
    "grasp_the_point\t2\t32\t1\t**(II)\n",
    encoding="utf-8")
(HERE / "table3.tsv").write_text(
    "# id\tstrongly_disagree\tmostly_disagree\tnot_so_much\tsomewhat\tagree\tstrongly_agree\texpected(neg-neu/neg-pos/neu-pos)\n"
    "individualization\t0\t2\t1\t3\t13\t16\tns/**/**\n"
    "relevance\t0\t1\t5\t7\t12\t10\t**/**/ns\n"
    "degree_of_demand\t0\t0\t0\t4\t12\t19\tns/**/**\n"
    "learning_progression\t0\t0\t2\t5\t14\t14\t**/**/**\n",
    encoding="utf-8")
(HERE / "table5.tsv").write_text(
    "# id\tn1\tmean1\tsd1\tn2\tmean2\tsd2\texpected  (feedback vs answer explanation)\n"
    "prompt1\t20\t5.9\t4.28\t19\t5.79\t4.47\tns\n"
    "prompt2\t19\t2.53\t4.22\t20\t4.05\t3.04\tns\n",
    encoding="utf-8")
