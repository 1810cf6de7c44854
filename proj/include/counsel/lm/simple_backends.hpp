#ifndef COUNSEL_LM_SIMPLE_BACKENDS_HPP
#define COUNSEL_LM_SIMPLE_BACKENDS_HPP

#include <counsel/error.hpp>
#include <counsel/lm/backend.hpp>
#include <counsel/tokenize.hpp>

#include <cmath>
#include <string>

namespace counsel::lm {

/// Answers every question with the same supportive paragraph. Useful for
/// exercising the serving path without a trained model; it cannot score.
class TemplateBackend final : public LmBackend {
public:
	TemplateBackend() = default;
	explicit TemplateBackend(std::string answer) : answer_(std::move(answer)) {}

	std::string name() const override { return "template"; }
	Capabilities capabilities() const override { return {false, true}; }

	std::string continue_prompt(GenerationRequest const &req) const override
	{
		req.validate();
		return answer_;
	}

	static std::string default_answer()
	{
		return "谢谢你愿意说出自己的困扰，这本身就需要勇气。你现在的感受是真实而且值得被认真对待的。"
			   "可以先试着照顾好基本的作息，规律地吃饭和睡觉，每天留一点时间做让自己放松的事情。"
			   "也可以和信任的朋友或家人聊一聊，把心里的想法说出来。"
			   "如果这种情绪持续了两周以上，或者已经影响到学习、工作和生活，建议尽快寻求专业心理咨询师或医生的帮助。"
			   "如果你有伤害自己的想法，请立即联系身边的人或拨打当地的心理援助热线。";
	}

private:
	std::string answer_ = default_answer();
};

/// Assigns every token (and EOS) probability 1/|V|. The perplexity of any
/// text under it is exactly |V|.
class UniformBackend final : public LmBackend {
public:
	UniformBackend(std::size_t vocab_size, TokenizerMode tokenizer = TokenizerMode::character)
		: vocab_size_(vocab_size), tokenizer_(tokenizer)
	{
		if (vocab_size_ < 1)
			throw ConfigError("uniform backend needs |V| >= 1");
	}

	std::string name() const override { return "uniform"; }
	Capabilities capabilities() const override { return {true, false}; }
	std::size_t vocab_size() const noexcept { return vocab_size_; }

	std::vector<TokenScore> score(std::string_view text) const override
	{
		double const lp = -std::log(static_cast<double>(vocab_size_));
		std::vector<TokenScore> out;
		for (auto &t : tokenize(text, tokenizer_))
			out.push_back({std::move(t), lp});
		out.push_back({"</s>", lp});
		return out;
	}

private:
	std::size_t vocab_size_;
	TokenizerMode tokenizer_;
};

} // namespace counsel::lm

#endif
