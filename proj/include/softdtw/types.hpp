#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace softdtw {

template <class T>
inline constexpr T kInf = std::numeric_limits<T>::infinity();

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
  public:
    using Error::Error;
};

/// Allocation refused: the ledger limit would be exceeded or the system
/// allocator failed. Carries the requested byte count.
class OutOfMemoryError : public Error {
  public:
    explicit OutOfMemoryError(std::size_t requested)
        : Error("allocation of " + std::to_string(requested) +
                " bytes refused"),
          requested_(requested)
    {
    }
    std::size_t requested_bytes() const { return requested_; }

  private:
    std::size_t requested_;
};

/// The end cell R[N,M] is +inf after a forward pass (bandwidth
/// misconfiguration); returned instead of poisoning callers with +inf.
class UnreachableEndError : public Error {
  public:
    using Error::Error;
};

/// A backward pass was handed a table with +inf at a reachable in-band cell.
class IncompleteTableError : public Error {
  public:
    using Error::Error;
};

/// Byte accounting for long-lived buffers (cost tensor, DP tables, gradient
/// tables, norm caches). Stands in for device-memory measurement in the
/// benchmark harness. An optional limit turns over-budget tracking into a
/// typed allocation refusal.
struct AllocationLedger {
    std::size_t live_bytes = 0;
    std::size_t peak_bytes = 0;
    std::size_t limit_bytes = 0;  // 0 = unlimited

    void track(std::size_t bytes)
    {
        if (limit_bytes != 0 && live_bytes + bytes > limit_bytes)
            throw OutOfMemoryError(bytes);
        live_bytes += bytes;
        if (live_bytes > peak_bytes) peak_bytes = live_bytes;
    }

    void release(std::size_t bytes)
    {
        if (bytes > live_bytes)
            throw ValidationError("ledger release of " +
                                  std::to_string(bytes) +
                                  " bytes exceeds live " +
                                  std::to_string(live_bytes));
        live_bytes -= bytes;
    }

    void reset()
    {
        live_bytes = 0;
        peak_bytes = 0;
    }
};

/// A vector whose lifetime is reported to an AllocationLedger. Movable, not
/// copyable; use clone() when a tracked copy is genuinely wanted.
template <class T>
class TrackedBuffer {
  public:
    TrackedBuffer() = default;

    TrackedBuffer(std::size_t count, T fill, AllocationLedger *ledger)
        : ledger_(ledger)
    {
        if (ledger_) ledger_->track(count * sizeof(T));
        try {
            data_.assign(count, fill);
        } catch (const std::bad_alloc &) {
            if (ledger_) ledger_->release(count * sizeof(T));
            ledger_ = nullptr;
            throw OutOfMemoryError(count * sizeof(T));
        }
    }

    TrackedBuffer(const TrackedBuffer &) = delete;
    TrackedBuffer &operator=(const TrackedBuffer &) = delete;

    TrackedBuffer(TrackedBuffer &&other) noexcept
        : data_(std::move(other.data_)), ledger_(other.ledger_)
    {
        other.ledger_ = nullptr;
    }

    TrackedBuffer &operator=(TrackedBuffer &&other) noexcept
    {
        if (this != &other) {
            untrack();
            data_ = std::move(other.data_);
            ledger_ = other.ledger_;
            other.ledger_ = nullptr;
        }
        return *this;
    }

    ~TrackedBuffer() { untrack(); }

    TrackedBuffer clone() const
    {
        TrackedBuffer copy;
        copy.ledger_ = ledger_;
        if (copy.ledger_) copy.ledger_->track(data_.size() * sizeof(T));
        copy.data_ = data_;
        return copy;
    }

    T *data() { return data_.data(); }
    const T *data() const { return data_.data(); }
    std::size_t size() const { return data_.size(); }
    T &operator[](std::size_t i) { return data_[i]; }
    const T &operator[](std::size_t i) const { return data_[i]; }

  private:
    void untrack()
    {
        if (ledger_) {
            ledger_->release(data_.size() * sizeof(T));
            ledger_ = nullptr;
        }
    }

    std::vector<T> data_;
    AllocationLedger *ledger_ = nullptr;
};

/// A batch of B multivariate series, each of length L with D features,
/// stored row-major as B x L x D. Entries are validated finite.
template <class T>
class SeriesBatch {
  public:
    SeriesBatch() = default;

    SeriesBatch(std::vector<T> raw, std::size_t batch, std::size_t length,
                std::size_t dim)
        : data_(std::move(raw)), batch_(batch), length_(length), dim_(dim)
    {
        if (batch_ == 0 || length_ == 0 || dim_ == 0)
            throw ValidationError("series batch dimensions must be >= 1");
        if (data_.size() != batch_ * length_ * dim_)
            throw ValidationError(
                "series batch: raw length " + std::to_string(data_.size()) +
                " does not equal B*L*D = " +
                std::to_string(batch_ * length_ * dim_));
        for (std::size_t i = 0; i < data_.size(); ++i)
            if (!std::isfinite(data_[i]))
                throw ValidationError("series batch: non-finite entry at index " +
                                      std::to_string(i));
    }

    std::size_t batch_size() const { return batch_; }
    std::size_t length() const { return length_; }
    std::size_t feature_dim() const { return dim_; }

    T at(std::size_t b, std::size_t t, std::size_t k) const
    {
        return data_[(b * length_ + t) * dim_ + k];
    }

    /// Pointer to element t of batch member b (D contiguous scalars).
    const T *element(std::size_t b, std::size_t t) const
    {
        return data_.data() + (b * length_ + t) * dim_;
    }
    T *element(std::size_t b, std::size_t t)
    {
        return data_.data() + (b * length_ + t) * dim_;
    }

    const std::vector<T> &raw() const { return data_; }
    std::vector<T> &raw() { return data_; }

  private:
    std::vector<T> data_;
    std::size_t batch_ = 0, length_ = 0, dim_ = 0;
};

template <class T>
SeriesBatch<T> new_series_batch(std::vector<T> raw, std::size_t b,
                                std::size_t l, std::size_t d)
{
    return SeriesBatch<T>(std::move(raw), b, l, d);
}

enum class CostMode { unfused, fused };
enum class BackwardSpace { log_space, linear };

/// Smoothing temperature, band constraint and mode flags for one sdtw call.
struct SdtwConfig {
    double gamma = 1.0;
    std::size_t bandwidth = 0;  // 0 = unconstrained, else Sakoe-Chiba radius
    CostMode cost_mode = CostMode::unfused;
    BackwardSpace backward_space = BackwardSpace::log_space;
    bool normalized = false;
};

inline void validate_config(const SdtwConfig &cfg, std::size_t n,
                            std::size_t m)
{
    if (!(cfg.gamma > 0.0))
        throw ValidationError("gamma must be > 0 (got " +
                              std::to_string(cfg.gamma) + ")");
    std::size_t gap = n > m ? n - m : m - n;
    if (cfg.bandwidth != 0 && cfg.bandwidth < gap)
        throw ValidationError("bandwidth " + std::to_string(cfg.bandwidth) +
                              " < |N - M| = " + std::to_string(gap) +
                              ": end cell unreachable");
    if (cfg.normalized && n != m)
        throw ValidationError("normalized sdtw requires N == M");
}

/// The pairwise cost tensor d, B x N x M, materialized in unfused mode only.
/// Accessors take 1-based DP-interior indices (i in [1,N], j in [1,M]).
template <class T>
class CostMatrixBatch {
  public:
    CostMatrixBatch() = default;

    CostMatrixBatch(std::size_t b, std::size_t n, std::size_t m,
                    AllocationLedger *ledger)
        : data_(b * n * m, T(0), ledger), batch_(b), n_(n), m_(m)
    {
    }

    std::size_t batch_size() const { return batch_; }
    std::size_t n() const { return n_; }
    std::size_t m() const { return m_; }

    T at(std::size_t b, std::size_t i, std::size_t j) const
    {
        return data_[(b * n_ + (i - 1)) * m_ + (j - 1)];
    }
    T &at(std::size_t b, std::size_t i, std::size_t j)
    {
        return data_[(b * n_ + (i - 1)) * m_ + (j - 1)];
    }

    const TrackedBuffer<T> &buffer() const { return data_; }

  private:
    TrackedBuffer<T> data_;
    std::size_t batch_ = 0, n_ = 0, m_ = 0;
};

/// Accumulated-cost table R, padded to B x (N+2) x (M+2). Interior cell
/// (i, j), 1-based, lives at storage (i, j); storage row 0 / column 0 hold
/// the +inf boundary with R[b,0,0] = 0; row N+1 / column M+1 exist so the
/// backward pass can address successors without branching on the slab edge.
template <class T>
class DpTableBatch {
  public:
    DpTableBatch() = default;

    DpTableBatch(std::size_t b, std::size_t n, std::size_t m,
                 AllocationLedger *ledger)
        : data_(checked_count(b, n, m), kInf<T>, ledger),
          batch_(b), n_(n), m_(m)
    {
        for (std::size_t bi = 0; bi < batch_; ++bi)
            at(bi, 0, 0) = T(0);
    }

    std::size_t batch_size() const { return batch_; }
    std::size_t n() const { return n_; }
    std::size_t m() const { return m_; }

    T at(std::size_t b, std::size_t i, std::size_t j) const
    {
        return data_[(b * (n_ + 2) + i) * (m_ + 2) + j];
    }
    T &at(std::size_t b, std::size_t i, std::size_t j)
    {
        return data_[(b * (n_ + 2) + i) * (m_ + 2) + j];
    }

    TrackedBuffer<T> &buffer() { return data_; }
    const TrackedBuffer<T> &buffer() const { return data_; }

    DpTableBatch clone() const
    {
        DpTableBatch copy;
        copy.data_ = data_.clone();
        copy.batch_ = batch_;
        copy.n_ = n_;
        copy.m_ = m_;
        return copy;
    }

    /// Releases the slab to a caller that wants to reuse the storage.
    TrackedBuffer<T> take_buffer() && { return std::move(data_); }

  private:
    static std::size_t checked_count(std::size_t b, std::size_t n,
                                     std::size_t m)
    {
        if (b == 0 || n == 0 || m == 0)
            throw ValidationError("dp table dimensions must be >= 1");
        return b * (n + 2) * (m + 2);
    }

    TrackedBuffer<T> data_;
    std::size_t batch_ = 0, n_ = 0, m_ = 0;
};

inline DpTableBatch<double> init_dp_table(std::size_t b, std::size_t n,
                                          std::size_t m,
                                          AllocationLedger *ledger = nullptr)
{
    return DpTableBatch<double>(b, n, m, ledger);
}

enum class GradSpace { linear, log_space };

/// Alignment-gradient table E (or its log Ebar), padded like DpTableBatch.
/// The backward pass consumes the forward table and reuses its slab.
template <class T>
class GradTableBatch {
  public:
    GradTableBatch() = default;

    GradTableBatch(TrackedBuffer<T> slab, std::size_t b, std::size_t n,
                   std::size_t m, GradSpace space)
        : data_(std::move(slab)), batch_(b), n_(n), m_(m), space_(space)
    {
    }

    std::size_t batch_size() const { return batch_; }
    std::size_t n() const { return n_; }
    std::size_t m() const { return m_; }
    GradSpace space() const { return space_; }

    T at(std::size_t b, std::size_t i, std::size_t j) const
    {
        return data_[(b * (n_ + 2) + i) * (m_ + 2) + j];
    }
    T &at(std::size_t b, std::size_t i, std::size_t j)
    {
        return data_[(b * (n_ + 2) + i) * (m_ + 2) + j];
    }

  private:
    TrackedBuffer<T> data_;
    std::size_t batch_ = 0, n_ = 0, m_ = 0;
    GradSpace space_ = GradSpace::linear;
};

/// Gradients of the loss with respect to both input series.
template <class T>
struct InputGradients {
    std::vector<T> grad_x;  // B x N x D, row-major
    std::vector<T> grad_y;  // B x M x D
};

}  // namespace softdtw
