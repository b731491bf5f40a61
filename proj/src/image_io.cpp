#include "protopart/image_io.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "protopart/errors.hpp"

namespace protopart {

Tensor read_image_rgb(const std::string& path) {
    cv::Mat img = cv::imread(path, cv::IMREAD_COLOR);
    if (img.empty()) throw IoError("cannot read image: " + path);
    int64_t h = img.rows, w = img.cols;
    Tensor out({3, h, w});
    for (int64_t y = 0; y < h; ++y) {
        const cv::Vec3b* row = img.ptr<cv::Vec3b>(static_cast<int>(y));
        for (int64_t x = 0; x < w; ++x) {
            // OpenCV loads BGR
            out.at(0, y, x) = row[x][2] / 255.0;
            out.at(1, y, x) = row[x][1] / 255.0;
            out.at(2, y, x) = row[x][0] / 255.0;
        }
    }
    return out;
}

void write_image_rgb(const std::string& path, const Tensor& chw) {
    if (chw.ndim() != 3 || chw.dim(0) != 3) throw ShapeMismatch("expected a [3,H,W] image");
    int64_t h = chw.dim(1), w = chw.dim(2);
    cv::Mat img(static_cast<int>(h), static_cast<int>(w), CV_8UC3);
    auto to_u8 = [](double v) {
        return static_cast<uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L));
    };
    for (int64_t y = 0; y < h; ++y) {
        cv::Vec3b* row = img.ptr<cv::Vec3b>(static_cast<int>(y));
        for (int64_t x = 0; x < w; ++x) {
            row[x][2] = to_u8(chw.at(0, y, x));
            row[x][1] = to_u8(chw.at(1, y, x));
            row[x][0] = to_u8(chw.at(2, y, x));
        }
    }
    if (!cv::imwrite(path, img)) throw IoError("cannot write image: " + path);
}

std::vector<uint8_t> read_mask_png(const std::string& path, int64_t* height, int64_t* width) {
    cv::Mat img = cv::imread(path, cv::IMREAD_GRAYSCALE);
    if (img.empty()) throw IoError("cannot read mask: " + path);
    *height = img.rows;
    *width = img.cols;
    std::vector<uint8_t> mask(static_cast<size_t>(img.rows) * img.cols);
    for (int y = 0; y < img.rows; ++y) {
        const uint8_t* row = img.ptr<uint8_t>(y);
        for (int x = 0; x < img.cols; ++x)
            mask[static_cast<size_t>(y) * img.cols + x] = row[x] >= 128 ? 1 : 0;
    }
    return mask;
}

void write_mask_png(const std::string& path, const std::vector<uint8_t>& mask, int64_t height,
                    int64_t width) {
    cv::Mat img(static_cast<int>(height), static_cast<int>(width), CV_8UC1);
    for (int64_t y = 0; y < height; ++y)
        for (int64_t x = 0; x < width; ++x)
            img.at<uint8_t>(static_cast<int>(y), static_cast<int>(x)) =
                mask[static_cast<size_t>(y * width + x)] ? 255 : 0;
    if (!cv::imwrite(path, img)) throw IoError("cannot write mask: " + path);
}

}  // namespace protopart
