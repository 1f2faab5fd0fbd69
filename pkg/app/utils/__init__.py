"""
ユーティリティモジュール
Utility modules

群語の解析と検証結果表
"""
