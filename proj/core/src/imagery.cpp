#include "typeblend/imagery.hpp"

#include <algorithm>
#include <cmath>

#include "typeblend/error.hpp"

namespace typeblend::imagery {

using backends::PromptLabel;
using backends::SegmentPrompt;

Image make_cutout(const Image& source, const Mask& mask) {
  if (!same_size(source, mask)) throw Error(ErrorCode::invalid_argument, "mask and image sizes differ");
  Image out(source.width(), source.height(), kBlack, 0);
  for (int y = 0; y < source.height(); ++y)
    for (int x = 0; x < source.width(); ++x)
      if (mask.get(x, y)) out.set(x, y, source.rgb(x, y), 255);
  return out;
}

namespace {

Mask segment_one(const Image& image, std::span<const SegmentPrompt> prompts, const backends::Segmenter& segmenter,
                 std::vector<std::string>& warnings) {
  const int long_side = std::max(image.width(), image.height());
  backends::SegmentResult res;
  if (long_side > kMaxSegmentationSide) {
    const double s = static_cast<double>(kMaxSegmentationSide) / long_side;
    const int w = std::max(1, static_cast<int>(std::lround(image.width() * s)));
    const int h = std::max(1, static_cast<int>(std::lround(image.height() * s)));
    const Image small = resize_area(image, w, h);
    std::vector<SegmentPrompt> scaled;
    for (const auto& p : prompts) {
      auto q = p.scaled(static_cast<double>(w) / image.width(), static_cast<double>(h) / image.height());
      q.coords[0] = std::min(q.coords[0], w - 1);
      q.coords[1] = std::min(q.coords[1], h - 1);
      if (q.kind == backends::PromptKind::box) {
        q.coords[2] = std::min(q.coords[2], w);
        q.coords[3] = std::min(q.coords[3], h);
      }
      scaled.push_back(q);
    }
    res = segmenter.segment(small, scaled);
    res.mask = resize_nearest(res.mask, image.width(), image.height());
  } else {
    res = segmenter.segment(image, prompts);
  }
  if (!same_size(image, res.mask)) throw Error(ErrorCode::invalid_input, "segmenter returned a mask of the wrong size");
  warnings.insert(warnings.end(), res.warnings.begin(), res.warnings.end());
  return res.mask;
}

void add_objects(ImagerySelection& sel, std::span<const SegmentPrompt> prompts, const backends::Segmenter& segmenter) {
  if (prompts.empty()) throw Error(ErrorCode::invalid_prompt, "at least one prompt is required");
  for (const auto& p : prompts)
    if (!p.valid_for(sel.source.width(), sel.source.height()))
      throw Error(ErrorCode::invalid_prompt, "prompt lies outside the image");

  std::vector<SegmentPrompt> negatives;
  for (const auto& p : prompts)
    if (p.label == PromptLabel::background) negatives.push_back(p);
  bool any_foreground = false;
  for (const auto& p : prompts) {
    if (p.label != PromptLabel::foreground) continue;
    any_foreground = true;
    std::vector<SegmentPrompt> call{p};
    call.insert(call.end(), negatives.begin(), negatives.end());
    Mask m = segment_one(sel.source, call, segmenter, sel.warnings);
    if (m.any()) {
      sel.mask = sel.mask | m;
      sel.object_masks.push_back(std::move(m));
    }
  }
  if (!any_foreground) throw Error(ErrorCode::invalid_prompt, "at least one foreground prompt is required");
  sel.prompts.insert(sel.prompts.end(), prompts.begin(), prompts.end());
  if (!sel.mask.any())
    throw Error(ErrorCode::empty_selection, "no object found at the selected location; try clicking inside the object");
  sel.cutout = make_cutout(sel.source, sel.mask);
}

}  // namespace

ImagerySelection add_selection(const Image& image, std::span<const SegmentPrompt> prompts,
                               const backends::Segmenter& segmenter) {
  if (image.empty()) throw Error(ErrorCode::invalid_input, "image is empty");
  ImagerySelection sel;
  sel.source = image;
  sel.mask = Mask(image.width(), image.height());
  add_objects(sel, prompts, segmenter);
  return sel;
}

ImagerySelection extend_selection(const ImagerySelection& sel, std::span<const SegmentPrompt> prompts,
                                  const backends::Segmenter& segmenter) {
  ImagerySelection out = sel;
  add_objects(out, prompts, segmenter);
  return out;
}

Image imagery_image(const ImagerySelection& sel, Background background) {
  if (!sel.mask.any()) throw Error(ErrorCode::empty_selection, "imagery selection is empty");
  const Rect b = sel.mask.bounds();
  const int px = static_cast<int>(std::ceil(b.width() * 0.05));
  const int py = static_cast<int>(std::ceil(b.height() * 0.05));
  const Rect padded{std::max(0, b.x0 - px), std::max(0, b.y0 - py), std::min(sel.source.width(), b.x1 + px),
                    std::min(sel.source.height(), b.y1 + py)};
  Image out(padded.width(), padded.height(), kWhite, background == Background::white ? 255 : 0);
  if (background == Background::transparent)
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x) out.set(x, y, kBlack, 0);
  for (int y = padded.y0; y < padded.y1; ++y)
    for (int x = padded.x0; x < padded.x1; ++x)
      if (sel.mask.get(x, y)) out.set(x - padded.x0, y - padded.y0, sel.source.rgb(x, y), 255);
  return out;
}

}  // namespace typeblend::imagery
