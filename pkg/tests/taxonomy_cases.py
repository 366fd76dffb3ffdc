"""The ten weakness exemplars: fixture file, intended class, lines holding the defect."""

from pathlib import Path

from wfsentinel.findings import Weakness

TAXONOMY_DIR = Path(__file__).parent / "fixtures" / "taxonomy"

CASES = [
    ("a_aiw.yml", Weakness.AIW, {12}),
    ("b_cfw.yml", Weakness.CFW, {11, 12, 13}),
    ("c_epw.yml", Weakness.EPW, {7, 8, 9}),
    ("d_grcw.yml", Weakness.GRCW, {13}),
    ("e_hgw.yml", Weakness.HGW, {5}),
    ("f_iw.yml", Weakness.IW, {17, 18}),
    ("g_kvcw.yml", Weakness.KVCW, {11}),
    ("h_sew.yml", Weakness.SEW, {10}),
    ("i_tmw.yml", Weakness.TMW, {3}),
    ("j_udw.yml", Weakness.UDW, {13}),
]
