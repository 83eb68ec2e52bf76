"""iosuav - modello di canale, progetto delle fasi e ottimizzazione della traiettoria"""
