from dotenv import load_dotenv
import os

load_dotenv()

LOG_LEVEL = os.getenv("FAIRLORA_LOG_LEVEL", "INFO")

# Значения по умолчанию для TrainConfig; конкретный запуск переопределяет их в run config
LEARNING_RATE = float(os.getenv("FAIRLORA_LEARNING_RATE", "0.05"))
MOMENTUM = float(os.getenv("FAIRLORA_MOMENTUM", "0.9"))
INIT_STD = float(os.getenv("FAIRLORA_INIT_STD", "0.01"))
HIDDEN_WIDTH = int(os.getenv("FAIRLORA_HIDDEN_WIDTH", "64"))
HIDDEN_LAYERS = int(os.getenv("FAIRLORA_HIDDEN_LAYERS", "2"))
EPOCHS = int(os.getenv("FAIRLORA_EPOCHS", "30"))
BATCH_SIZE = int(os.getenv("FAIRLORA_BATCH_SIZE", "64"))
TRAIN_FRACTION = float(os.getenv("FAIRLORA_TRAIN_FRACTION", "0.8"))
PROBE_FRACTION = float(os.getenv("FAIRLORA_PROBE_FRACTION", "0.5"))

FID_EPSILON = float(os.getenv("FAIRLORA_FID_EPSILON", "1e-6"))

SWEEP_LAMBDAS = [0.01, 0.1, 1.0, 10.0, 100.0]
SWEEP_SEEDS = [0, 1, 2]
