"""wrap-forge: rephrase web corpora with an instruction-tuned LLM, filter the
generations, mix real and synthetic shards at exact ratios, and analyze the
result (readability, diversity, syntax, embedding similarity, perplexity,
generation cost)."""

__version__ = "0.1.0"
