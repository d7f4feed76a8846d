from setuptools import setup, find_packages

setup(name='spikedcorr',
      version='0.0',
      python_requires='>=3.8',
      description='Asymptotic eigenstructure of spiked sample correlation matrices',
      packages=find_packages(exclude=["test"]),
      install_requires=[
          "numpy",
          "pandas",
          "scikit-learn",
          "scipy",
      ],
      extras_require={
          "test": ["pytest", "hypothesis"],
      },
      entry_points={
          "console_scripts": ["spikedcorr=spikedcorr.cli:main"],
      })
