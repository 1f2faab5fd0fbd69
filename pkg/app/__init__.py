"""
クラスター q-Painlevé 検証エンジン
Cluster q-Painlevé Verification Engine

クラスター変異で実現される q-Painlevé 方程式・量子化・Nekrasov 関数の双線形関係を
厳密計算と高精度数値計算で検証する
"""

__version__ = "1.0.0"
__description__ = "クラスター代数による q-Painlevé 力学の記号・数値検証エンジン"
