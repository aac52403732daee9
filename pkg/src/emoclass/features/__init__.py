"""Feature extraction: capped-vocabulary sparse vectors and embedding sequences."""

from .embeddings import (
    EmbeddingSequence,
    EmbeddingTable,
    embed_sequence,
    load_embedding_table,
    read_embedding_records,
    save_embedding_table,
    sequence_from_array,
    stack_sequences,
    write_embedding_records,
)
from .sparse import (
    BowVectorizer,
    TfidfVectorizer,
    bow_vector,
    tfidf_fit,
    tfidf_vector,
)
from .vocabulary import Vocabulary, build_vocabulary, load_stopwords

__all__ = [
    "BowVectorizer",
    "EmbeddingSequence",
    "EmbeddingTable",
    "TfidfVectorizer",
    "Vocabulary",
    "bow_vector",
    "build_vocabulary",
    "embed_sequence",
    "load_embedding_table",
    "load_stopwords",
    "read_embedding_records",
    "save_embedding_table",
    "sequence_from_array",
    "stack_sequences",
    "tfidf_fit",
    "tfidf_vector",
    "write_embedding_records",
]
