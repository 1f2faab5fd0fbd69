"""
データモデル
Data models

検証項目・結果・バッチ・エラー
"""
