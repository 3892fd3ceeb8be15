from .classifiers import predict, predict_knn, train_knn, train_pca_pipeline, train_whitened_cosine
from .model_file import load_model, save_model
