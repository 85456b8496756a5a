# config.py
import os
from dotenv import load_dotenv

load_dotenv()

# === TOOL ===
TOOL_VERSION = os.getenv("TOOL_VERSION", "0.3.0")
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")

# Folder output report JSON + CSV
REPORT_DIR = os.getenv("REPORT_DIR", "reports")

# === JUNCTION TREE ENGINE ===
# Tabel dengan jumlah sel <= cutoff tetap disimpan dense walau sudah dikompres
DENSE_TABLE_CUTOFF = int(os.getenv("DENSE_TABLE_CUTOFF", "4096"))

# Batas rescale potensial; di luar rentang ini magnitudo dipindah ke log-scale
RESCALE_LOW = float(os.getenv("RESCALE_LOW", "1e-150"))
RESCALE_HIGH = float(os.getenv("RESCALE_HIGH", "1e150"))

# Triangulasi default per marker: "slice", "triangle", "optimal"
TREE_METHOD = os.getenv("TREE_METHOD", "optimal")

# Kompres support struktural tree marker sekali, dipakai ulang untuk semua psi
COMPRESS_MARKER_TREES = os.getenv("COMPRESS_MARKER_TREES", "true").lower() == "true"

# Paralel per marker (0 = jumlah marker, dibatasi jumlah CPU)
THREADS = int(os.getenv("THREADS", "0"))

# ========== OPTIMIZER (MLE) ==========
OPT_RESTARTS = int(os.getenv("OPT_RESTARTS", "5"))

# Konvergen kalau sebaran log-likelihood simplex < FTOL
OPT_FTOL = float(os.getenv("OPT_FTOL", "1e-8"))
OPT_XTOL = float(os.getenv("OPT_XTOL", "1e-6"))
OPT_MAXITER = int(os.getenv("OPT_MAXITER", "4000"))
OPT_SEED = int(os.getenv("OPT_SEED", "1"))

# Standard error via Hessian numerik (central difference)
OPT_STANDARD_ERRORS = os.getenv("OPT_STANDARD_ERRORS", "true").lower() == "true"
HESSIAN_STEP = float(os.getenv("HESSIAN_STEP", "1e-4"))

# ========== DECONVOLUTION ==========
# Target massa probabilitas yang harus dikunjungi sampler
DECONV_MASS = float(os.getenv("DECONV_MASS", "0.99"))
DECONV_MAX_SAMPLES = int(os.getenv("DECONV_MAX_SAMPLES", "20000"))

# ========== DIAGNOSTICS ==========
INTERVAL_LEVELS = os.getenv("INTERVAL_LEVELS", "0.005,0.25,0.5,0.75,0.995")

