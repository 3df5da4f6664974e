#!/usr/bin/env python3
"""Regenerates everything under fixtures/. Output is a pure function of SEED."""

import json
import random
from pathlib import Path

SEED = 20240601
ROOT = Path(__file__).resolve().parent.parent / "fixtures"
rng = random.Random(SEED)

HUMAN_GENES = ["TGFBR1", "SNAI1", "BAX", "BCL2L1", "EGFR"]
MOUSE_GENES = ["Pcsk9"]


def q(s):
    return json.dumps(s, ensure_ascii=False)


# ---------------------------------------------------------------- sequences

def rand_seq(n, gc=0.5, max_run=3):
    out = []
    while len(out) < n:
        b = rng.choice("GC") if rng.random() < gc else rng.choice("AT")
        if len(out) >= max_run and all(x == b for x in out[-max_run:]):
            continue
        out.append(b)
    return "".join(out)


def gc_frac(s):
    return sum(c in "GC" for c in s) / len(s)


def spacer(n):
    while True:
        s = rand_seq(n)
        if 0.4 <= gc_frac(s) <= 0.6 and "TTTT" not in s:
            return s


def rc(s):
    return s[::-1].translate(str.maketrans("ACGT", "TGCA"))


def mutate(s, k):
    pos = rng.sample(range(len(s)), k)
    out = list(s)
    for p in pos:
        out[p] = rng.choice([b for b in "ACGT" if b != out[p]])
    return "".join(out)


def fasta(records):
    lines = []
    for rid, desc, seq in records:
        lines.append(f">{rid} {desc}".rstrip())
        lines.extend(seq[i:i + 60] for i in range(0, len(seq), 60))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- library

def build_library():
    rows = []
    groups = {}
    for gene in HUMAN_GENES:
        ko = [(spacer(20), "NGG") for _ in range(4)] + [(spacer(23), "TTTV") for _ in range(4)]
        groups[("human", gene, "knockout")] = ko
        for modality in ["activation", "interference", "base_editing", "prime_editing"]:
            groups[("human", gene, modality)] = [(spacer(20), "NGG") for _ in range(4)]
    for gene in MOUSE_GENES:
        groups[("mouse", gene, "knockout")] = [(spacer(20), "NGG") for _ in range(4)] + [
            (spacer(23), "TTTV") for _ in range(4)
        ]
    for (species, gene, modality), guides in groups.items():
        for rank, (sp, pam) in enumerate(guides, start=1):
            rows.append((species, gene, modality, sp, pam, rank, "synthetic-v1"))
    text = "species\tgene\tmodality\tspacer\tpam\trank\tsource\n"
    text += "".join("\t".join(map(str, r)) + "\n" for r in rows)
    return text, groups


def build_loci(groups):
    """One 800 bp locus per gene with the top guides planted around the middle."""
    loci = {}
    for (species, gene, modality), guides in groups.items():
        loci.setdefault(gene, [])
        if modality == "knockout":
            cas9 = next(g for g in guides if g[1] == "NGG")[0]
            cas12a = next(g for g in guides if g[1] == "TTTV")[0]
            loci[gene].append(cas9 + "AGG")
            loci[gene].append("TTTA" + cas12a)
        elif modality in ("base_editing", "prime_editing"):
            loci[gene].append(guides[0][0] + "TGG")
    records = []
    for gene, inserts in loci.items():
        core = rand_seq(8).join(inserts)
        left = (800 - len(core)) // 2
        seq = rand_seq(left) + core + rand_seq(800 - left - len(core))
        records.append((gene, "synthetic locus", seq))
    return records


def build_genome(loci, groups):
    """Three synthetic chromosomes holding the loci plus planted near-matches."""
    by_gene = {rid: seq for rid, _, seq in loci}
    layout = [["TGFBR1", "SNAI1"], ["BAX", "BCL2L1"], ["EGFR", "Pcsk9"]]
    records = []
    for i, genes in enumerate(layout, start=1):
        parts = [rand_seq(1500)]
        for gene in genes:
            parts.append(by_gene[gene])
            parts.append(rand_seq(1500))
            species = "mouse" if gene in MOUSE_GENES else "human"
            ko = groups[(species, gene, "knockout")]
            cas9 = next(g for g in ko if g[1] == "NGG")[0]
            cas12a = next(g for g in ko if g[1] == "TTTV")[0]
            parts.append(mutate(cas9, 2) + "CGG")
            parts.append(rand_seq(700))
            parts.append(rc("TTTC" + mutate(cas12a, 1)))
            parts.append(rand_seq(900))
            parts.append(mutate(cas9, 3) + "TGG")
            parts.append(rand_seq(1200))
        records.append((f"chrS{i}", "synthetic chromosome", "".join(parts)))
    return records


# ---------------------------------------------------------------- workflows

def state(id, instruction, input, **kw):
    s = {"id": id, "instruction": instruction, "input": input}
    s.update(kw)
    return s


def choice(*options):
    return {"kind": "choice", "options": list(options)}


FREE = {"kind": "free_text"}
NONE = {"kind": "none"}


def machine(name, description, states, depends_on=()):
    return {"task_name": name, "description": description, "depends_on": list(depends_on), "states": states}


def system_state(task, what, options, values, record):
    return state(
        task,
        f"Which {what} would you like to use?",
        choice(*options),
        record=record,
        values=values,
        transitions={"next": "END"},
    )


def delivery_state(task, scenario):
    return state(
        task,
        f"How will the {scenario} reagents be delivered into your cells? Lentiviral transduction suits hard-to-"
        "transfect or dividing cells and stable expression; RNP electroporation gives short exposure and fewer "
        "off-target edits; lipofection is simplest for easy-to-transfect lines; AAV suits in vivo work.",
        choice("Lentiviral transduction", "Electroporation of RNP", "Lipofection of plasmid", "AAV transduction"),
        record="delivery",
        transitions={"next": "END"},
    )


def guide_states(task, modality, system_arg, noun):
    return [
        state(
            task,
            "Which organism (species or cell line) are you editing?",
            FREE,
            record="species",
            default_from="species",
            tags=["organism_checkpoint"],
            transitions={"next": f"{task}.gene"},
        ),
        state(
            f"{task}.gene",
            "Which gene do you want to target? Give the official gene symbol.",
            FREE,
            record="gene",
            default_from="gene",
            validator={"kind": "gene_symbol"},
            transitions={"next": f"{task}.design"},
        ),
        state(
            f"{task}.design",
            f"Retrieving the top-ranked pre-designed {noun} sequences for {{gene}} in {{species}}.",
            NONE,
            tool={
                "name": "lookup_guides",
                "output": "guides",
                "args": {
                    "species": "@species",
                    "gene": "@gene",
                    "modality": modality,
                    "system": system_arg,
                    "n": 4,
                },
            },
            transitions={"next": "END"},
        ),
    ]


def protocol_states(task, modality, system_arg):
    return [
        state(
            task,
            "Retrieving the experimental protocol that matches your delivery choice ({delivery}).",
            NONE,
            tool={
                "name": "protocol_lookup",
                "output": "protocol",
                "args": {"modality": modality, "system": system_arg, "delivery": "@delivery"},
            },
            transitions={"next": "END"},
        )
    ]


def primer_states(task, assay):
    return [
        state(
            task,
            f"Primers will be designed for {assay}. Use the reference locus loaded for the target gene, or paste "
            "your own reference sequence around the edit site?",
            choice("Use the loaded reference locus", "Paste a reference sequence"),
            transitions={
                "Use the loaded reference locus": f"{task}.design",
                "Paste a reference sequence": f"{task}.paste",
            },
        ),
        state(
            f"{task}.paste",
            "Paste the reference sequence (150 to 5000 nt) spanning the edit site.",
            FREE,
            record="pasted_reference",
            validator={"kind": "nucleotide_sequence", "min_len": 150, "max_len": 5000},
            tags=["requests_sequence"],
            transitions={"next": f"{task}.design"},
        ),
        state(
            f"{task}.design",
            f"Designing primer pairs flanking the target site for {assay}.",
            NONE,
            tool={
                "name": "design_primers",
                "output": "primers",
                "args": {"gene": "@gene", "guides": "@guides?", "reference": "@pasted_reference?"},
            },
            transitions={"next": "END"},
        ),
    ]


def off_target_states():
    t = "off_target.StateStep1"
    return [
        state(
            t,
            "Which guide sequences should be searched for off-target sites (up to 3 mismatches, PAM-aware)?",
            choice("Designed guides", "Enter a sequence"),
            transitions={"Designed guides": f"{t}.scan", "Enter a sequence": f"{t}.sequence"},
        ),
        state(
            f"{t}.sequence",
            "Enter the spacer sequence (18 to 25 nt) to search.",
            FREE,
            record="query_spacer",
            validator={"kind": "nucleotide_sequence", "min_len": 18, "max_len": 25},
            tags=["requests_sequence"],
            transitions={"next": f"{t}.scan"},
        ),
        state(
            f"{t}.scan",
            "Scanning the reference sequences for off-target sites.",
            NONE,
            tool={
                "name": "off_target_scan",
                "output": "off_target",
                "args": {
                    "sequence": "@query_spacer?",
                    "guides": "@guides?",
                    "system": "@cas_system?",
                    "max_mismatches": 3,
                },
            },
            transitions={"next": "END"},
        ),
    ]


def build_workflows():
    m = []
    ko = "knockout"
    m.append(machine(f"{ko}.StateStep1", "Cas System selection for knockout", [
        system_state(f"{ko}.StateStep1", "CRISPR nuclease for the knockout (Cas9 uses an NGG PAM, Cas12a a TTTV PAM)",
                     ["Cas9", "Cas12a"], {"Cas9": "SpCas9", "Cas12a": "AsCas12a"}, "cas_system")]))
    m.append(machine(f"{ko}.StateStep2", "Delivery approach selection for knockout", [delivery_state(f"{ko}.StateStep2", "knockout")]))
    m.append(machine(f"{ko}.StateStep3", "guideRNA design for knockout",
                     guide_states(f"{ko}.StateStep3", "knockout", "@cas_system", "guide RNA"), [f"{ko}.StateStep1"]))
    m.append(machine(f"{ko}.StateStep4", "Experimental Protocol Selection for knockout",
                     protocol_states(f"{ko}.StateStep4", "knockout", "@cas_system?"), [f"{ko}.StateStep2"]))
    m.append(machine(f"{ko}.StateStep4_5_1_Sanger", "Primer Design for knockout, Mutation sequencing by Sanger",
                     primer_states(f"{ko}.StateStep4_5_1_Sanger", "Sanger sequencing of the edited locus")))
    m.append(machine(f"{ko}.StateStep4_5_1_NGS",
                     "Primer Design for knockout, Mutation sequencing by next-generation sequencing (NGS)",
                     primer_states(f"{ko}.StateStep4_5_1_NGS", "amplicon next-generation sequencing")))

    be = "base_editing"
    m.append(machine(f"{be}.StateStep1", "Base Editor System selection for base editing", [
        system_state(f"{be}.StateStep1", "base editor (cytosine editors make C>T changes, adenine editors A>G)",
                     ["Cytosine base editor", "Adenine base editor"],
                     {"Cytosine base editor": "BE4max (SpCas9 nickase)", "Adenine base editor": "ABE8e (SpCas9 nickase)"},
                     "editor_system")]))
    m.append(machine(f"{be}.StateStep2", "guideRNA design for base editing",
                     guide_states(f"{be}.StateStep2", "base_editing", "@editor_system", "base-editing guide RNA"),
                     [f"{be}.StateStep1"]))
    m.append(machine(f"{be}.StateStep3", "Delivery approach selection for base editing", [delivery_state(f"{be}.StateStep3", "base editing")]))
    m.append(machine(f"{be}.StateStep4", "Experimental Protocol Selection for base editing",
                     protocol_states(f"{be}.StateStep4", "base_editing", "@editor_system?"), [f"{be}.StateStep3"]))
    m.append(machine(f"{be}.StateStep4_5_1_Sanger", "Primer Design for base editing, Mutation sequencing by Sanger",
                     primer_states(f"{be}.StateStep4_5_1_Sanger", "Sanger sequencing of the edited locus")))
    m.append(machine(f"{be}.StateStep4_5_1_NGS",
                     "Primer Design for base editing, Mutation sequencing by next-generation sequencing (NGS)",
                     primer_states(f"{be}.StateStep4_5_1_NGS", "amplicon next-generation sequencing")))

    pe = "prime_editing"
    m.append(machine(f"{pe}.StateStep1", "Prime Editing System selection for prime editing", [
        system_state(f"{pe}.StateStep1", "prime editing system",
                     ["PE2", "PE3", "PEmax"],
                     {"PE2": "PE2 (SpCas9 nickase-RT)", "PE3": "PE3 (SpCas9 nickase-RT)", "PEmax": "PEmax (SpCas9 nickase-RT)"},
                     "editor_system")]))
    m.append(machine(f"{pe}.StateStep2", "Delivery approach selection for prime editing", [delivery_state(f"{pe}.StateStep2", "prime editing")]))
    m.append(machine(f"{pe}.StateStep3", "pegRNA design for prime editing",
                     guide_states(f"{pe}.StateStep3", "prime_editing", "@editor_system", "pegRNA spacer"),
                     [f"{pe}.StateStep1"]))
    m.append(machine(f"{pe}.StateStep4", "Experimental Protocol Selection for prime editing",
                     protocol_states(f"{pe}.StateStep4", "prime_editing", "@editor_system?"), [f"{pe}.StateStep2"]))
    m.append(machine(f"{pe}.StateStep4_5_1_Sanger", "Primer Design for prime editing, Mutation sequencing by Sanger",
                     primer_states(f"{pe}.StateStep4_5_1_Sanger", "Sanger sequencing of the edited locus")))
    m.append(machine(f"{pe}.StateStep4_5_1_NGS",
                     "Primer Design for prime editing, Mutation sequencing by next-generation sequencing (NGS)",
                     primer_states(f"{pe}.StateStep4_5_1_NGS", "amplicon next-generation sequencing")))

    ar = "act_rep"
    m.append(machine(f"{ar}.StateStep1", "Activation or repression system selection for CRISPRa/CRISPRi", [
        system_state(f"{ar}.StateStep1", "mode of transcriptional control (CRISPRa activates, CRISPRi represses)",
                     ["CRISPRa", "CRISPRi"], {"CRISPRa": "activation", "CRISPRi": "interference"}, "modality")]))
    m.append(machine(f"{ar}.StateStep2", "Delivery approach selection for CRISPRa/CRISPRi", [delivery_state(f"{ar}.StateStep2", "CRISPRa/CRISPRi")]))
    m.append(machine(f"{ar}.StateStep3", "guideRNA design for CRISPRa/CRISPRi",
                     guide_states(f"{ar}.StateStep3", "@modality", "dCas9", "promoter-targeting guide RNA"),
                     [f"{ar}.StateStep1"]))
    m.append(machine(f"{ar}.StateStep4", "Experimental Protocol Selection for CRISPRa/CRISPRi",
                     protocol_states(f"{ar}.StateStep4", "@modality?", "dCas9"), [f"{ar}.StateStep2"]))
    m.append(machine(f"{ar}.StateStep4_5_1", "Primer Design for CRISPRa/CRISPRi, qPCR",
                     primer_states(f"{ar}.StateStep4_5_1", "qPCR quantification of the target transcript")))

    m.append(machine("off_target.StateStep1", "Off-target search/predictiono using CRISPRitz", off_target_states()))
    return m


def toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return str(v)
    if isinstance(v, str):
        return q(v)
    if isinstance(v, list):
        return "[" + ", ".join(toml_value(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{ " + ", ".join(f"{q(k) if not k.isidentifier() else k} = {toml_value(x)}" for k, x in v.items()) + " }"
    raise TypeError(v)


def key(k):
    return k if k.replace("_", "").isalnum() else q(k)


def machine_toml(m):
    out = [f"task_name = {q(m['task_name'])}", f"description = {q(m['description'])}",
           f"depends_on = {toml_value(m['depends_on'])}", ""]
    for s in m["states"]:
        out.append("[[states]]")
        for k in ["id", "instruction", "input", "record", "default_from", "validator", "tags"]:
            if k in s:
                out.append(f"{k} = {toml_value(s[k])}")
        if "values" in s:
            out.append("")
            out.append("[states.values]")
            out.extend(f"{key(k)} = {q(v)}" for k, v in s["values"].items())
        if "tool" in s:
            t = s["tool"]
            out.append("")
            out.append("[states.tool]")
            out.append(f"name = {q(t['name'])}")
            out.append(f"output = {q(t['output'])}")
            out.append("")
            out.append("[states.tool.args]")
            out.extend(f"{key(k)} = {toml_value(v)}" for k, v in t["args"].items())
        out.append("")
        out.append("[states.transitions]")
        out.extend(f"{key(k)} = {q(v)}" for k, v in s["transitions"].items())
        out.append("")
    return "\n".join(out)


CATALOG_GROUPS = [
    ("For knockout", ["knockout.StateStep1", "knockout.StateStep2", "knockout.StateStep3", "knockout.StateStep4",
                      "knockout.StateStep4_5_1_Sanger", "knockout.StateStep4_5_1_NGS"]),
    ("For base editing", ["base_editing.StateStep1", "base_editing.StateStep2", "base_editing.StateStep3",
                          "base_editing.StateStep4", "base_editing.StateStep4_5_1_Sanger",
                          "base_editing.StateStep4_5_1_NGS"]),
    ("For prime editing", ["prime_editing.StateStep1", "prime_editing.StateStep2", "prime_editing.StateStep3",
                           "prime_editing.StateStep4", "prime_editing.StateStep4_5_1_Sanger",
                           "prime_editing.StateStep4_5_1_NGS"]),
    ("For CRISPRa/CRISPRi", ["act_rep.StateStep1", "act_rep.StateStep2", "act_rep.StateStep3", "act_rep.StateStep4",
                             "act_rep.StateStep4_5_1"]),
    ("For Off-Target Prediction", ["off_target.StateStep1"]),
]

PIPELINES = {
    "knockout": ["knockout.StateStep1", "knockout.StateStep2", "knockout.StateStep3", "off_target.StateStep1",
                 "knockout.StateStep4", "knockout.StateStep4_5_1_NGS"],
    "base_editing": ["base_editing.StateStep1", "base_editing.StateStep3", "base_editing.StateStep2",
                     "off_target.StateStep1", "base_editing.StateStep4", "base_editing.StateStep4_5_1_NGS"],
    "prime_editing": ["prime_editing.StateStep1", "prime_editing.StateStep2", "prime_editing.StateStep3",
                      "off_target.StateStep1", "prime_editing.StateStep4", "prime_editing.StateStep4_5_1_NGS"],
    "activation_interference": ["act_rep.StateStep1", "act_rep.StateStep2", "act_rep.StateStep3",
                                "act_rep.StateStep4", "act_rep.StateStep4_5_1"],
}


def catalog_toml():
    out = ["# Task table grouping (in display order) and the meta-mode pipelines.", ""]
    for heading, tasks in CATALOG_GROUPS:
        out += ["[[group]]", f"heading = {q(heading)}", f"tasks = {toml_value(tasks)}", ""]
    out.append("[pipelines]")
    out += [f"{k} = {toml_value(v)}" for k, v in PIPELINES.items()]
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- tables

ORGANISMS = """\
# canonical: synonyms (case-insensitive, matched as whole words)
human: homo sapiens, h. sapiens, patient-derived, human cell line, a375, hek293t, hek293, hela, k562, jurkat, hct116, u2os, mcf7
mouse: mus musculus, murine, nih3t3, b16, mesc
rat: rattus norvegicus
zebrafish: danio rerio
fruit fly: drosophila melanogaster, drosophila
yeast: saccharomyces cerevisiae
"""

SAFETY = """\
threshold = 20
warning = "You are designing a gene-editing experiment on human material. Heritable (germline or embryo) genome editing is prohibited in many jurisdictions and is the subject of an international moratorium. Confirm that you understand the risk and that this work does not involve germline editing before continuing."
moratorium_reference = "https://www.nature.com/articles/d41586-019-00726-5"
"""

PROTOCOLS = [
    ("ko-lenti", "Lentiviral delivery of Cas nuclease and guide RNA for knockout", "knockout", ["lentivir"], ["*"],
     "Sanjana, Shalem and Zhang, Nature Methods 2014 (lentiCRISPRv2 vectors)",
     ["Clone the guide into the lentiviral transfer vector", "Package lentivirus in HEK293T cells",
      "Transduce target cells at low MOI and select with puromycin", "Expand clones and harvest genomic DNA"]),
    ("ko-rnp-cas12a", "Cas12a RNP electroporation for knockout", "knockout", ["electropor", "rnp"], ["cas12a"],
     "Zetsche et al., Cell 2015 (Cas12a characterization)",
     ["Order synthetic crRNA", "Complex AsCas12a protein with crRNA", "Electroporate cells", "Harvest after 72 h"]),
    ("ko-rnp-cas9", "Cas9 RNP electroporation for knockout", "knockout", ["electropor", "rnp"], ["cas9"],
     "Ran et al., Nature Protocols 2013 (genome engineering with Cas9)",
     ["Order synthetic sgRNA", "Complex SpCas9 protein with sgRNA", "Electroporate cells", "Harvest after 72 h"]),
    ("ko-generic", "Plasmid transfection for knockout", "knockout", ["*"], ["*"],
     "Ran et al., Nature Protocols 2013 (genome engineering with Cas9)",
     ["Clone the guide into an all-in-one expression plasmid", "Transfect", "Enrich transfected cells",
      "Harvest genomic DNA"]),
    ("be-lenti", "Lentiviral base editing", "base_editing", ["lentivir"], ["*"],
     "Komor et al., Nature 2016 (cytosine base editing)",
     ["Clone guide into base-editor lentiviral vector", "Package and transduce", "Select and expand",
      "Sequence the target window"]),
    ("be-generic", "Base editor plasmid or mRNA delivery", "base_editing", ["*"], ["*"],
     "Gaudelli et al., Nature 2017 (adenine base editing)",
     ["Co-deliver editor and guide", "Harvest after 72 h", "Sequence the target window"]),
    ("pe-generic", "Prime editing delivery", "prime_editing", ["*"], ["*"],
     "Anzalone et al., Nature 2019 (prime editing)",
     ["Clone pegRNA (and nicking guide for PE3)", "Co-deliver with the prime editor", "Harvest after 72 h",
      "Sequence the target"]),
    ("crispra-lenti", "Lentiviral CRISPR activation", "activation", ["*"], ["*"],
     "Konermann et al., Nature 2015 (SAM activation)",
     ["Establish dCas9-activator line", "Transduce guide library", "Select", "Measure transcript by qPCR"]),
    ("crispri-lenti", "Lentiviral CRISPR interference", "interference", ["*"], ["*"],
     "Gilbert et al., Cell 2014 (genome-scale CRISPRi/a)",
     ["Establish dCas9-KRAB line", "Transduce guides", "Select", "Measure transcript by qPCR"]),
]


def protocols_toml():
    out = []
    for pid, title, modality, delivery, systems, ref, steps in PROTOCOLS:
        out += ["[[protocol]]", f"id = {q(pid)}", f"title = {q(title)}", f"modality = {q(modality)}",
                f"delivery = {toml_value(delivery)}", f"systems = {toml_value(systems)}", f"reference = {q(ref)}",
                f"steps = {toml_value(steps)}", ""]
    return "\n".join(out)


# ---------------------------------------------------------------- corpus

CORPUS = {
    "cas9": ("SpCas9 nuclease overview", [
        "SpCas9 is the RNA-guided nuclease from Streptococcus pyogenes. A single guide RNA directs it to a 20 nucleotide protospacer that must sit immediately upstream of an NGG protospacer adjacent motif.",
        "After binding, the HNH and RuvC domains each cut one strand, producing a blunt double-strand break about three bases upstream of the motif. Repair by non-homologous end joining leaves small insertions or deletions that often disrupt the reading frame, which is why SpCas9 is the default choice for gene knockout.",
        "Off-target cleavage tolerates several mismatches, especially far from the motif. High-fidelity variants and ribonucleoprotein delivery shorten exposure and reduce unintended edits.",
    ]),
    "cas12a": ("Cas12a nuclease overview", [
        "Cas12a, formerly called Cpf1, is a type V CRISPR nuclease that recognizes a T-rich TTTV protospacer adjacent motif located on the 5 prime side of the target.",
        "Cas12a processes its own CRISPR RNA array, so several crRNAs can be expressed from one transcript for multiplexed editing. It cuts with a staggered break that leaves 5 prime overhangs distal to the motif.",
        "AsCas12a and LbCas12a are the most widely used orthologs. Genome-wide studies report fewer off-target edits for Cas12a than for wild-type SpCas9, which makes it attractive for knockout screens in A-T rich regions.",
    ]),
    "base_editing": ("Base editing overview", [
        "Base editors fuse a catalytically impaired Cas9 nickase to a deaminase so that a single base can be converted without a double-strand break.",
        "Cytosine base editors such as BE4max convert C to T within an editing window of roughly positions 4 to 8 of the protospacer. Adenine base editors such as ABE8e convert A to G within a similar window.",
        "Because no donor template is needed, base editing is efficient in dividing and non-dividing cells. Bystander edits occur when more than one editable base falls inside the window, so guide placement matters.",
    ]),
}


def corpus_files():
    files = {}
    manifest = ["# Q&A corpus: one [[doc]] per plain-text document.", ""]
    for doc_id, (title, paras) in CORPUS.items():
        path = f"{doc_id}.txt"
        files[path] = "\n\n".join(paras) + "\n"
        manifest += ["[[doc]]", f"id = {q(doc_id)}", f"title = {q(title)}", f"path = {q(path)}", ""]
    files["manifest.toml"] = "\n".join(manifest)
    return files


# ---------------------------------------------------------------- scripts

def reply(thoughts, **fields):
    return json.dumps({"Thoughts": thoughts, **fields})


def entry(contains, response, once=False):
    return {"contains": contains, "response": response, "once": once}


DEMO_REQUEST = "design sgRNA to knockout human EGFR"


def decompose_script():
    return {
        "strict": True,
        "entries": [
            entry([f'"{DEMO_REQUEST}"'], reply(
                "The user only needs guide RNAs for a knockout, which matches knockout.StateStep3; it depends on "
                "knockout.StateStep1.",
                Tasks=["knockout.StateStep1", "knockout.StateStep3"])),
            entry(['"knockout EGFR, then tell me something unstructured"'],
                  "Sure! First pick a Cas system, then design guides."),
        ],
    }


def autopilot_entries():
    s = lambda sid: f"[state: {sid}]"
    out = [
        entry([s("knockout.StateStep1")], reply("Cas12a handles multiplexing and has few off-target edits.", Answer="Cas12a")),
        entry([s("knockout.StateStep2")], reply("Stable expression in A375 favours lentivirus.", Answer="Lentiviral transduction")),
        entry([s("knockout.StateStep3")], reply("The request names human A375 cells.", Answer="human")),
        entry([s("off_target.StateStep1")], reply("Check the guides that were just designed.", Answer="Designed guides")),
        entry([s("off_target.StateStep1.sequence")], reply("A sequence is requested.", Answer="I don't know")),
        entry([s("knockout.StateStep4_5_1_NGS")], reply("No sequence was provided by the user.", Answer="Use the loaded reference locus")),
    ]
    for gene in HUMAN_GENES + MOUSE_GENES:
        out.append(entry([s("knockout.StateStep3.gene"), gene], reply(f"The request targets {gene}.", Answer=gene)))
    return out


def autopilot_script():
    return {"strict": True, "entries": autopilot_entries()}


def qa_entries():
    return [
        entry(['"What is Cas12a?"'], reply(
            "The top passage defines Cas12a.",
            Answer="Cas12a, formerly called Cpf1, is a type V CRISPR nuclease that recognizes a T-rich TTTV "
                   "protospacer adjacent motif [cas12a#0].")),
        entry(['"What is the capital of France?"'], reply("No passage applies.", Answer="The passages do not contain the answer.")),
    ]


def default_script():
    d = decompose_script()
    return {"strict": True, "entries": d["entries"] + autopilot_entries() + qa_entries()}


# ---------------------------------------------------------------- main

def write(rel, text):
    p = ROOT / rel
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)


def main():
    lib_text, groups = build_library()
    loci = build_loci(groups)
    genome = build_genome(loci, groups)
    write("library.tsv", lib_text)
    write("loci.fa", fasta(loci))
    write("ref.fa", fasta(genome))
    write("organisms.txt", ORGANISMS)
    write("safety.toml", SAFETY)
    write("protocols.toml", protocols_toml())
    for m in build_workflows():
        family = m["task_name"].split(".")[0]
        write(f"workflows/{family}/{m['task_name']}.toml", machine_toml(m))
    write("workflows/catalog.toml", catalog_toml())
    for name, text in corpus_files().items():
        write(f"corpus/{name}", text)
    for name, script in [("decompose_demo", decompose_script()), ("knockout_autopilot", autopilot_script()),
                         ("default", default_script())]:
        write(f"scripts/{name}.json", json.dumps(script, indent=2) + "\n")


if __name__ == "__main__":
    main()
