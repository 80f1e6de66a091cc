"""Utilitários: erros, configuração, taxonomia e formatos de ficheiro."""
