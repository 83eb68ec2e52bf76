# config/__init__.py
"""
Configurazione centralizzata dello scenario.
Contiene SceneConfig, le impostazioni del solutore e degli esperimenti, i profili.
"""
