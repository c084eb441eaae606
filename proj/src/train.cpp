#include "hqcm/train.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace hqcm {

namespace {

struct Batch {
    Tensor<float> images;
    Tensor<float> masks;
    std::vector<int> labels;
};

Batch make_batch(const Dataset& ds, const std::vector<std::size_t>& order, std::size_t begin,
                 std::size_t end, bool do_augment, std::uint64_t aug_seed) {
    const int B = static_cast<int>(end - begin);
    const int S = ds.image_size;
    Batch batch;
    batch.images = Tensor<float>({B, 1, S, S});
    batch.masks = Tensor<float>({B, 1, S, S});
    batch.labels.resize(static_cast<std::size_t>(B));
    const std::size_t plane = static_cast<std::size_t>(S) * S;
    for (int b = 0; b < B; ++b) {
        const std::size_t idx = order[begin + static_cast<std::size_t>(b)];
        const Sample* s = &ds.samples[idx];
        Sample augmented;
        if (do_augment) {
            Pcg32 rng(aug_seed, static_cast<std::uint64_t>(idx));  // stream = sample index
            augmented = augment(*s, rng);
            s = &augmented;
        }
        std::copy(s->image.data.begin(), s->image.data.end(),
                  batch.images.data.begin() + static_cast<std::ptrdiff_t>(plane * static_cast<std::size_t>(b)));
        std::copy(s->mask.data.begin(), s->mask.data.end(),
                  batch.masks.data.begin() + static_cast<std::ptrdiff_t>(plane * static_cast<std::size_t>(b)));
        batch.labels[static_cast<std::size_t>(b)] = s->label;
    }
    return batch;
}

int argmax_row(const Tensor<float>& logits, int row) {
    int best = 0;
    for (int k = 1; k < logits.dim(1); ++k)
        if (logits.at(row, k) > logits.at(row, best)) best = k;
    return best;
}

}  // namespace

EvalResult evaluate(Model<float>& model, const Dataset& dataset, Split split,
                    const std::vector<double>& class_weights, const LossWeights& loss_weights,
                    int batch_size) {
    const auto idx = dataset.indices(split);
    if (idx.empty())
        throw std::invalid_argument("evaluate: split '" + split_name(split) + "' is empty");

    model.set_training(false);
    EvalResult result;
    double loss_sum = 0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < idx.size(); begin += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(idx.size(), begin + static_cast<std::size_t>(batch_size));
        Batch batch = make_batch(dataset, idx, begin, end, false, 0);
        ForwardResult<float> fwd = model.forward(batch.images);
        TotalLoss<float> loss =
            total_loss(fwd.logits, batch.labels, class_weights, fwd.attention, batch.masks, loss_weights);
        loss_sum += loss.total * static_cast<double>(end - begin);
        for (int b = 0; b < static_cast<int>(end - begin); ++b) {
            const int pred = argmax_row(fwd.logits, b);
            result.predictions.push_back(pred);
            result.labels.push_back(batch.labels[static_cast<std::size_t>(b)]);
            if (pred == batch.labels[static_cast<std::size_t>(b)]) ++correct;
        }
    }
    result.loss = loss_sum / static_cast<double>(idx.size());
    result.accuracy = static_cast<double>(correct) / static_cast<double>(idx.size());
    return result;
}

TrainResult train(Model<float>& model, const Dataset& dataset, const TrainConfig& config,
                  std::ostream* log) {
    auto train_idx = dataset.indices(Split::train);
    const auto val_idx = dataset.indices(Split::val);
    if (train_idx.empty()) throw std::invalid_argument("train: training split is empty");
    if (val_idx.empty()) throw std::invalid_argument("train: validation split is empty");
    if (config.batch_size < 2) throw std::invalid_argument("train: batch size must be >= 2");

    TrainResult result;
    result.class_weights = inverse_frequency_weights(dataset.labels(Split::train), model.config().num_classes);

    AdamW<float> optimizer({config.learning_rate, config.weight_decay});
    PlateauScheduler scheduler(config.lr_factor, config.lr_patience, config.lr_threshold);
    auto params = model.parameters();

    double best_val = std::numeric_limits<double>::infinity();
    int stall = 0;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        Pcg32 shuffle_rng(config.seed, 0x2000ULL + static_cast<std::uint64_t>(epoch));
        for (std::size_t i = train_idx.size() - 1; i > 0; --i)
            std::swap(train_idx[i], train_idx[shuffle_rng.next_below(static_cast<std::uint32_t>(i + 1))]);

        model.set_training(true);
        double loss_sum = 0;
        std::size_t correct = 0, seen = 0;
        for (std::size_t begin = 0; begin < train_idx.size(); begin += static_cast<std::size_t>(config.batch_size)) {
            std::size_t end = std::min(train_idx.size(), begin + static_cast<std::size_t>(config.batch_size));
            if (end - begin < 2) break;  // batchnorm needs at least two samples
            Batch batch = make_batch(dataset, train_idx, begin, end, config.augment_train,
                                     config.seed + static_cast<std::uint64_t>(epoch));

            ForwardResult<float> fwd = model.forward(batch.images);
            TotalLoss<float> loss = total_loss(fwd.logits, batch.labels, result.class_weights,
                                               fwd.attention, batch.masks, config.loss);
            model.backward(loss.grad_logits, loss.grad_attention);
            clip_grad_norm(params, config.clip_max_norm);
            optimizer.step(params);

            loss_sum += loss.total * static_cast<double>(end - begin);
            seen += end - begin;
            for (int b = 0; b < static_cast<int>(end - begin); ++b)
                if (argmax_row(fwd.logits, b) == batch.labels[static_cast<std::size_t>(b)]) ++correct;
        }

        EvalResult val = evaluate(model, dataset, Split::val, result.class_weights, config.loss,
                                  config.batch_size);

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(seen);
        stats.train_acc = static_cast<double>(correct) / static_cast<double>(seen);
        stats.val_loss = val.loss;
        stats.val_acc = val.accuracy;
        stats.lr = optimizer.lr();
        result.history.push_back(stats);

        if (log) {
            char line[192];
            std::snprintf(line, sizeof line,
                          "epoch %3d  train_loss %.4f  train_acc %.4f  val_loss %.4f  val_acc %.4f  lr %.5g",
                          epoch, stats.train_loss, stats.train_acc, stats.val_loss, stats.val_acc, stats.lr);
            *log << line << std::endl;
        }

        optimizer.set_lr(optimizer.lr() * scheduler.step(val.loss));

        if (val.loss < best_val - config.lr_threshold) {
            best_val = val.loss;
            stall = 0;
        } else if (++stall >= config.early_stop_patience) {
            result.early_stopped = true;
            break;
        }
    }
    return result;
}

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("history: cannot write '" + path + "'");
    os << "epoch,train_loss,train_acc,val_loss,val_acc,lr\n";
    for (const auto& e : history) {
        char line[224];
        std::snprintf(line, sizeof line, "%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", e.epoch, e.train_loss,
                      e.train_acc, e.val_loss, e.val_acc, e.lr);
        os << line;
    }
}

}  // namespace hqcm
