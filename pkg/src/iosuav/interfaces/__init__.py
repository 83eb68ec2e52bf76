"""iosuav - interfacce utente"""
